"""LDPC code construction: PEG-style standard codes and Root-Check codes.

Codeword layout is systematic: positions ``0..K-1`` carry the message and
``K..N-1`` the parity bits. Each position is also assigned to a fading block;
block ``b`` owns an equal slice of the systematic bits and an equal slice of
the parity bits, and :attr:`TannerGraph.tx_order` lists positions block by
block so that a contiguous run of channel uses covers exactly one block.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Iterable

import numpy as np
from numba import njit

from . import gf2

STANDARD = "standard"
ROOTCHECK = "rootcheck"
SUPPORTED_ROOTCHECK_RATES = (Fraction(1, 2), Fraction(1, 4))


class ConstructionError(ValueError):
    """A parity-check matrix with the requested structure could not be built."""


class UnsupportedRateError(ConstructionError):
    pass


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class CodeSpec:
    """Code dimensions.

    ``n_blocks`` is the number of fading blocks the code is laid out for
    (``F``); it fixes the position-to-block map and, for Root-Check codes,
    the root-check structure.
    """

    n: int
    k: int
    n_blocks: int = 2
    kind: str = STANDARD

    def __post_init__(self):
        if self.kind not in (STANDARD, ROOTCHECK):
            raise ValueError(f"unknown code kind {self.kind!r}")
        if not 0 < self.k < self.n:
            raise ValueError(f"need N > K > 0, got N={self.n}, K={self.k}")
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")
        if self.k % self.n_blocks or (self.n - self.k) % self.n_blocks:
            raise ValueError(
                f"K={self.k} and N-K={self.n - self.k} must both split evenly "
                f"over F={self.n_blocks} blocks"
            )

    @classmethod
    def from_rate(cls, n: int, rate, n_blocks: int = 2, kind: str = STANDARD) -> "CodeSpec":
        rate = Fraction(rate).limit_denominator(64)
        k = n * rate
        if k.denominator != 1:
            raise ValueError(f"N={n} is not compatible with rate {rate}")
        return cls(n=n, k=int(k), n_blocks=n_blocks, kind=kind)

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, self.n)

    @property
    def m(self) -> int:
        return self.n - self.k

    def block_of(self) -> np.ndarray:
        sys_len = self.k // self.n_blocks
        par_len = self.m // self.n_blocks
        return np.concatenate(
            [np.arange(self.k) // sys_len, np.arange(self.m) // par_len]
        ).astype(np.int64)


class TannerGraph:
    """Immutable bipartite graph of a parity-check matrix.

    Edges are numbered check-major: the edges of check ``c`` are
    ``check_ptr[c]:check_ptr[c+1]`` with variable indices ``edge_var`` in
    ascending order. ``var_edges[var_ptr[v]:var_ptr[v+1]]`` lists the edge ids
    touching variable ``v`` in ascending check order.
    """

    def __init__(self, check_adj: Iterable[Iterable[int]], n_var: int, k: int | None = None,
                 spec: CodeSpec | None = None, block_of: np.ndarray | None = None):
        rows = []
        for c, raw in enumerate(check_adj):
            raw = np.asarray(list(raw), dtype=np.int64)
            row = np.unique(raw)
            if len(row) != len(raw):
                raise ConstructionError(f"check {c} has a repeated edge")
            rows.append(row)
        self.n_var = int(n_var)
        self.n_check = len(rows)
        self.spec = spec
        self.k = int(k if k is not None else (spec.k if spec else self.n_var - self.n_check))
        degs = np.array([len(r) for r in rows], dtype=np.int64)
        self.check_ptr = np.concatenate([[0], np.cumsum(degs)]).astype(np.int64)
        self.edge_var = np.concatenate(rows).astype(np.int64) if rows else np.zeros(0, np.int64)
        if self.edge_var.size and (self.edge_var.min() < 0 or self.edge_var.max() >= self.n_var):
            raise ConstructionError("variable index out of range")
        self.edge_check = np.repeat(np.arange(self.n_check, dtype=np.int64), degs)
        order = np.lexsort((self.edge_check, self.edge_var))
        self.var_edges = order.astype(np.int64)
        vdeg = np.bincount(self.edge_var, minlength=self.n_var)
        self.var_ptr = np.concatenate([[0], np.cumsum(vdeg)]).astype(np.int64)
        if block_of is None:
            block_of = spec.block_of() if spec else np.zeros(self.n_var, dtype=np.int64)
        self.block_of = np.asarray(block_of, dtype=np.int64)
        self._parity_map: np.ndarray | None = None
        for arr in (self.check_ptr, self.edge_var, self.edge_check, self.var_edges,
                    self.var_ptr, self.block_of):
            arr.setflags(write=False)

    @classmethod
    def from_matrix(cls, H, k: int | None = None, **kw) -> "TannerGraph":
        H = np.asarray(H) % 2
        return cls([np.flatnonzero(row) for row in H], H.shape[1], k=k, **kw)

    @property
    def n_edges(self) -> int:
        return int(self.edge_var.size)

    @property
    def check_degrees(self) -> np.ndarray:
        return np.diff(self.check_ptr)

    @property
    def var_degrees(self) -> np.ndarray:
        return np.diff(self.var_ptr)

    @property
    def check_adj(self) -> list[np.ndarray]:
        return [self.edge_var[a:b] for a, b in zip(self.check_ptr[:-1], self.check_ptr[1:])]

    @property
    def var_adj(self) -> list[np.ndarray]:
        return [self.edge_check[self.var_edges[a:b]]
                for a, b in zip(self.var_ptr[:-1], self.var_ptr[1:])]

    @property
    def tx_order(self) -> np.ndarray:
        """Codeword positions in transmission order (block 0 first)."""
        return np.argsort(self.block_of, kind="stable")

    def to_matrix(self) -> np.ndarray:
        H = np.zeros((self.n_check, self.n_var), dtype=np.uint8)
        H[self.edge_check, self.edge_var] = 1
        return H

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        return np.add.reduceat(bits[..., self.edge_var], self.check_ptr[:-1], axis=-1) % 2

    def is_codeword(self, bits: np.ndarray) -> bool:
        return not self.syndrome(bits).any()

    def __eq__(self, other):
        if not isinstance(other, TannerGraph):
            return NotImplemented
        return (self.n_var == other.n_var and self.k == other.k
                and np.array_equal(self.check_ptr, other.check_ptr)
                and np.array_equal(self.edge_var, other.edge_var))

    __hash__ = object.__hash__

    def parity_map(self) -> np.ndarray:
        """Dense ``(N-K, K)`` GF(2) matrix ``P`` with ``parity = P @ message``."""
        if self._parity_map is None:
            H = self.to_matrix()
            inv = gf2.inverse(H[:, self.k:])
            if inv is None or H.shape[0] != self.n_var - self.k:
                raise EncodingError("parity part of H is not invertible over GF(2)")
            pm = (inv.astype(np.int64) @ H[:, :self.k].astype(np.int64)) % 2
            self._parity_map = pm.astype(np.uint8)
        return self._parity_map

    def encodable(self) -> bool:
        try:
            self.parity_map()
        except EncodingError:
            return False
        return True


def encode(graph: TannerGraph, message) -> np.ndarray:
    """Systematic encoding; ``message`` may be ``(K,)`` or ``(batch, K)``."""
    msg = np.asarray(message, dtype=np.uint8)
    if msg.shape[-1] != graph.k:
        raise EncodingError(f"message length {msg.shape[-1]} != K={graph.k}")
    pm = graph.parity_map().astype(np.int32)
    parity = (msg.astype(np.int32) @ pm.T) % 2
    return np.concatenate([msg, parity.astype(np.uint8)], axis=-1)


# ---------------------------------------------------------------------------
# PEG construction

@njit(cache=True)
def _xorshift(state):
    state ^= state >> np.uint64(12)
    state ^= state << np.uint64(25)
    state ^= state >> np.uint64(27)
    return state


@njit(cache=True)
def _peg_kernel(order, var_target, var_class, chk_target, var_group, chk_group, allowed,
                var_adj, var_deg, chk_adj, chk_deg, chk_fill, seed):
    n_var = var_adj.shape[0]
    n_chk = chk_adj.shape[0]
    cap = chk_adj.shape[1]
    level_c = np.empty(n_chk, np.int64)
    level_v = np.empty(n_var, np.int64)
    cand = np.empty(n_chk, np.bool_)
    fv = np.empty(n_var, np.int64)
    fc = np.empty(n_chk, np.int64)
    state = np.uint64(seed) | np.uint64(1)
    for v in order:
        gv = var_group[v]
        cls = var_class[v]
        while var_deg[v] < var_target[v]:
            # candidates: allowed, not yet adjacent, prefer checks with room left
            n_room = 0
            n_any = 0
            for c in range(n_chk):
                ok = allowed[gv, chk_group[c]] and chk_deg[c] < cap
                if ok:
                    for i in range(var_deg[v]):
                        if var_adj[v, i] == c:
                            ok = False
                            break
                cand[c] = ok
                if ok:
                    n_any += 1
                    if chk_fill[c, cls] < chk_target[c, cls]:
                        n_room += 1
            if n_any == 0:
                return v + 1
            if n_room > 0:
                for c in range(n_chk):
                    if cand[c] and chk_fill[c, cls] >= chk_target[c, cls]:
                        cand[c] = False
                n_total = n_room
            else:
                n_total = n_any

            level_c[:] = -1
            level_v[:] = -1
            level_v[v] = 0
            fv[0] = v
            nfv = 1
            depth = 0
            reached = 0
            pick_level = -1
            while True:
                depth += 1
                nfc = 0
                for a in range(nfv):
                    u = fv[a]
                    for i in range(var_deg[u]):
                        c = var_adj[u, i]
                        if level_c[c] == -1:
                            level_c[c] = depth
                            fc[nfc] = c
                            nfc += 1
                            if cand[c]:
                                reached += 1
                if nfc == 0:
                    pick_level = -1
                    break
                if reached == n_total:
                    pick_level = depth
                    break
                nfv = 0
                for a in range(nfc):
                    c = fc[a]
                    for i in range(chk_deg[c]):
                        u = chk_adj[c, i]
                        if level_v[u] == -1:
                            level_v[u] = depth
                            fv[nfv] = u
                            nfv += 1
                if nfv == 0:
                    pick_level = -1
                    break

            best = -1
            best_key = 1 << 40
            ties = 0
            for c in range(n_chk):
                if not cand[c] or level_c[c] != pick_level:
                    continue
                key = chk_fill[c, cls] - chk_target[c, cls]
                if key < best_key:
                    best_key = key
                    best = c
                    ties = 1
                elif key == best_key:
                    ties += 1
                    state = _xorshift(state)
                    if state % np.uint64(ties) == 0:
                        best = c
            if best < 0:
                return v + 1
            var_adj[v, var_deg[v]] = best
            var_deg[v] += 1
            chk_adj[best, chk_deg[best]] = v
            chk_deg[best] += 1
            chk_fill[best, cls] += 1
    return 0


def _targets(total: int, count: int) -> np.ndarray:
    base, rem = divmod(total, count)
    t = np.full(count, base, dtype=np.int64)
    t[:rem] += 1
    return t


def _peg_build(spec: CodeSpec, dv: int, var_group, chk_group, allowed, preplaced,
               seed: int, max_attempts: int) -> TannerGraph:
    n, m, k = spec.n, spec.m, spec.k
    if dv < 1 or dv > m:
        raise ConstructionError(f"variable degree {dv} infeasible with {m} checks")
    var_target = np.full(n, dv, dtype=np.int64)
    var_class = (np.arange(n) >= k).astype(np.int64)
    # systematic and parity edges are balanced separately so that every row of
    # the parity part of H gets the same weight
    chk_target = np.stack([_targets(dv * k, m), _targets(dv * (n - k), m)], axis=1)
    cap = int(chk_target.sum(axis=1).max()) + 8
    # with only even column weights the rows of H sum to zero, so no full-height
    # square submatrix can be invertible; skip the encodability requirement then
    need_invertible = dv % 2 == 1
    last_err = "no attempt made"
    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt])
        var_adj = np.full((n, dv), -1, dtype=np.int64)
        var_deg = np.zeros(n, dtype=np.int64)
        chk_adj = np.full((m, cap), -1, dtype=np.int64)
        chk_deg = np.zeros(m, dtype=np.int64)
        chk_fill = np.zeros((m, 2), dtype=np.int64)
        for v, c in preplaced:
            var_adj[v, var_deg[v]] = c
            var_deg[v] += 1
            chk_adj[c, chk_deg[c]] = v
            chk_deg[c] += 1
            chk_fill[c, var_class[v]] += 1
        order = rng.permutation(n).astype(np.int64)
        status = _peg_kernel(order, var_target, var_class, chk_target,
                             np.asarray(var_group, np.int64), np.asarray(chk_group, np.int64),
                             np.asarray(allowed, np.bool_), var_adj, var_deg, chk_adj, chk_deg,
                             chk_fill, int(rng.integers(1, 2**62)))
        if status != 0:
            last_err = f"variable {status - 1} could not be connected"
            continue
        graph = TannerGraph([chk_adj[c, :chk_deg[c]] for c in range(m)], n, spec=spec)
        if not need_invertible or graph.encodable():
            return graph
        last_err = "parity part singular"
    raise ConstructionError(f"construction failed after {max_attempts} attempts: {last_err}")


def build_standard_code(spec: CodeSpec, seed: int = 0, dv: int = 3,
                        max_attempts: int = 200) -> TannerGraph:
    """Regular-variable-degree LDPC code placed by progressive edge growth.

    Check degrees are balanced (``dv*N/(N-K)`` each when that divides).
    Attempts are repeated with derived seeds until the parity part of H is
    invertible, so the result is always systematically encodable when ``dv``
    is odd.
    """
    if spec.kind != STANDARD:
        raise ValueError("build_standard_code needs a standard CodeSpec")
    return _peg_build(spec, dv, np.zeros(spec.n), np.zeros(spec.m), np.ones((1, 1), bool),
                      [], seed, max_attempts)


def build_rootcheck_code(spec: CodeSpec, seed: int = 0, dv: int = 3,
                         max_attempts: int = 200) -> TannerGraph:
    """Root-Check LDPC code for ``spec.n_blocks`` fading blocks.

    Check ``j < K`` is the root check of information bit ``j``: its only other
    neighbours lie outside the block that owns bit ``j``, so the bit is
    recoverable from the remaining blocks when its own block is erased. The
    remaining ``N - 2K`` checks (rate below 1/2) are unconstrained. All edges
    besides the root identities are placed by PEG.
    """
    if spec.kind != ROOTCHECK:
        raise ValueError("build_rootcheck_code needs a rootcheck CodeSpec")
    F = spec.n_blocks
    if spec.rate not in SUPPORTED_ROOTCHECK_RATES or spec.rate * F > 1:
        raise UnsupportedRateError(
            f"Root-Check codes support rates {[str(r) for r in SUPPORTED_ROOTCHECK_RATES]} "
            f"with rate <= 1/F; got rate {spec.rate} and F={F}"
        )
    if F < 2:
        raise UnsupportedRateError("Root-Check codes need at least two fading blocks")
    block = spec.block_of()
    per_block = spec.k // F
    chk_group = np.concatenate([np.arange(spec.k) // per_block,
                                np.full(spec.m - spec.k, F)])
    allowed = np.ones((F, F + 1), dtype=bool)
    allowed[np.arange(F), np.arange(F)] = False
    preplaced = [(j, j) for j in range(spec.k)]
    return _peg_build(spec, dv, block, chk_group, allowed, preplaced, seed, max_attempts)


def build_code(spec: CodeSpec, seed: int = 0, dv: int = 3) -> TannerGraph:
    if spec.kind == ROOTCHECK:
        return build_rootcheck_code(spec, seed=seed, dv=dv)
    return build_standard_code(spec, seed=seed, dv=dv)


def has_rootcheck_property(graph: TannerGraph) -> bool:
    """Every information bit has a check whose other neighbours avoid its block."""
    blocks = graph.block_of
    adj = graph.check_adj
    var_adj = graph.var_adj
    for v in range(graph.k):
        b = blocks[v]
        if not any(np.all(blocks[adj[c][adj[c] != v]] != b) for c in var_adj[v]):
            return False
    return True


def has_four_cycle(graph: TannerGraph) -> bool:
    seen: set[tuple[int, int]] = set()
    for row in graph.check_adj:
        for a in range(len(row)):
            for b in range(a + 1, len(row)):
                pair = (int(row[a]), int(row[b]))
                if pair in seen:
                    return True
                seen.add(pair)
    return False


# ---------------------------------------------------------------------------
# alist I/O (MacKay's sparse-matrix text format)

def write_alist(graph: TannerGraph, fh: IO[str]) -> None:
    vdeg, cdeg = graph.var_degrees, graph.check_degrees
    fh.write(f"{graph.n_var} {graph.n_check}\n")
    fh.write(f"{vdeg.max()} {cdeg.max()}\n")
    fh.write(" ".join(map(str, vdeg)) + "\n")
    fh.write(" ".join(map(str, cdeg)) + "\n")
    for nbrs in graph.var_adj:
        padded = list(nbrs + 1) + [0] * (vdeg.max() - len(nbrs))
        fh.write(" ".join(map(str, padded)) + "\n")
    for nbrs in graph.check_adj:
        padded = list(nbrs + 1) + [0] * (cdeg.max() - len(nbrs))
        fh.write(" ".join(map(str, padded)) + "\n")


def read_alist(fh: IO[str], k: int | None = None, spec: CodeSpec | None = None) -> TannerGraph:
    tokens = fh.read().split()
    it = iter(int(t) for t in tokens)
    n, m = next(it), next(it)
    max_v, max_c = next(it), next(it)
    vdeg = [next(it) for _ in range(n)]
    cdeg = [next(it) for _ in range(m)]
    for _ in range(n):
        for _ in range(max_v):
            next(it)
    rows = []
    for c in range(m):
        entries = [next(it) for _ in range(max_c)]
        rows.append([e - 1 for e in entries if e > 0])
        if len(rows[-1]) != cdeg[c]:
            raise ValueError(f"alist check {c}: degree mismatch")
    graph = TannerGraph(rows, n, k=k, spec=spec)
    if list(graph.var_degrees) != vdeg:
        raise ValueError("alist variable degrees disagree with check lists")
    return graph
