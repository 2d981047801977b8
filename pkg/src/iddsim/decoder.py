"""Sum-product LDPC decoding with flooding, layered and residual-driven schedules.

All schedules share the same tanh-rule check update and keep the variable
posteriors incrementally, so the variable-to-check message on edge ``e`` is
always ``posterior[v] - to_var[e]`` (the "generate and propagate" step of a
layered decoder). LLRs are positive when bit 0 is more likely.

Schedules:

``bp``     flooding: all checks, then all variables.
``lbp``    layered sweep over checks in index order.
``rbp``    propagate the single pending check-to-variable message with the
           largest residual, then refresh residuals around its variable.
``nwbp``   like ``rbp`` but a whole check node is propagated at a time.
``rlbp``   layered sweep in descending check-metric order, re-sorted every
           iteration.
``rolbp``  alternates: odd iterations sweep in descending check-metric order,
           even iterations in index order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .ldpc import TannerGraph

LLR_MAX = 50.0
TANH_LIMIT = 1.0 - 1e-12
SCHEDULES = ("bp", "lbp", "rbp", "nwbp", "rlbp", "rolbp")
_SCHED_ID = {name: i for i, name in enumerate(SCHEDULES)}


class ScheduleError(ValueError):
    pass


@dataclass
class MessageState:
    """Edge-indexed messages plus per-variable channel and posterior LLRs."""

    to_var: np.ndarray
    to_check: np.ndarray
    channel_llr: np.ndarray
    posterior: np.ndarray

    @classmethod
    def initial(cls, graph: TannerGraph, channel_llr, to_var=None) -> "MessageState":
        ch = np.clip(np.asarray(channel_llr, dtype=np.float64), -LLR_MAX, LLR_MAX)
        if ch.shape != (graph.n_var,):
            raise ValueError(f"expected {graph.n_var} channel LLRs, got {ch.shape}")
        r = np.zeros(graph.n_edges) if to_var is None else np.array(to_var, dtype=np.float64)
        post = ch + np.bincount(graph.edge_var, weights=r, minlength=graph.n_var)
        q = np.clip(post[graph.edge_var] - r, -LLR_MAX, LLR_MAX)
        return cls(to_var=r, to_check=q, channel_llr=ch, posterior=post)


@dataclass
class DecodeResult:
    posterior_llr: np.ndarray
    hard_bits: np.ndarray
    inner_iters: int
    converged: bool
    messages_computed: int = 0
    messages_propagated: int = 0
    state: MessageState | None = None
    check_order: np.ndarray | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# kernels

@njit(cache=True, inline="always")
def _box(p):
    if p > TANH_LIMIT:
        return LLR_MAX
    if p < -TANH_LIMIT:
        return -LLR_MAX
    out = 2.0 * np.arctanh(p)
    if out > LLR_MAX:
        return LLR_MAX
    if out < -LLR_MAX:
        return -LLR_MAX
    return out


@njit(cache=True, inline="always")
def _clip(x):
    if x > LLR_MAX:
        return LLR_MAX
    if x < -LLR_MAX:
        return -LLR_MAX
    return x


@njit(cache=True)
def _cn_rule(check_ptr, q, out, c, tbuf):
    """Leave-one-out tanh product for the edges of check ``c``."""
    a = check_ptr[c]
    d = check_ptr[c + 1] - a
    p = 1.0
    for i in range(d):
        t = np.tanh(0.5 * q[a + i])
        tbuf[i] = p
        tbuf[d + i] = t
        p *= t
    s = 1.0
    for i in range(d - 1, -1, -1):
        out[a + i] = _box(tbuf[i] * s)
        s *= tbuf[d + i]


@njit(cache=True)
def _load_inputs(check_ptr, edge_var, post, r, q, c):
    for e in range(check_ptr[c], check_ptr[c + 1]):
        q[e] = _clip(post[edge_var[e]] - r[e])


@njit(cache=True)
def _syndrome_ok(check_ptr, edge_var, post):
    for c in range(check_ptr.size - 1):
        par = 0
        for e in range(check_ptr[c], check_ptr[c + 1]):
            if post[edge_var[e]] < 0.0:
                par ^= 1
        if par:
            return False
    return True


@njit(cache=True)
def _layered_check(check_ptr, edge_var, post, r, q, new, c, tbuf):
    _load_inputs(check_ptr, edge_var, post, r, q, c)
    _cn_rule(check_ptr, q, new, c, tbuf)
    for e in range(check_ptr[c], check_ptr[c + 1]):
        v = edge_var[e]
        post[v] = (post[v] - r[e]) + new[e]
        r[e] = new[e]


@njit(cache=True)
def _check_metrics(check_ptr, edge_var, post, r, q, new, phi, tbuf):
    for c in range(check_ptr.size - 1):
        _load_inputs(check_ptr, edge_var, post, r, q, c)
        _cn_rule(check_ptr, q, new, c, tbuf)
        m = 0.0
        for e in range(check_ptr[c], check_ptr[c + 1]):
            d = abs(new[e] - r[e])
            if d > m:
                m = d
        phi[c] = m


@njit(cache=True)
def _run_sweeps(sched, check_ptr, edge_var, channel, post, r, q, max_iters, early_stop,
                order_trace):
    """Flooding (0), LBP (1), RLBP (4) and ROLBP (5). Returns iters, converged, computed."""
    n_chk = check_ptr.size - 1
    n_edges = edge_var.size
    dmax = 0
    for c in range(n_chk):
        dmax = max(dmax, check_ptr[c + 1] - check_ptr[c])
    tbuf = np.empty(2 * dmax + 2)
    new = np.empty(n_edges)
    phi = np.empty(n_chk)
    natural = np.arange(n_chk)
    computed = 0
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        if sched == 0:
            for e in range(n_edges):
                q[e] = _clip(post[edge_var[e]] - r[e])
            for c in range(n_chk):
                _cn_rule(check_ptr, q, r, c, tbuf)
            for v in range(post.size):
                post[v] = channel[v]
            for e in range(n_edges):
                post[edge_var[e]] += r[e]
            computed += n_edges
            if order_trace.shape[0] > 0:
                order_trace[it - 1, :] = natural
        else:
            use_queue = sched == 4 or (sched == 5 and it % 2 == 1)
            if use_queue:
                _check_metrics(check_ptr, edge_var, post, r, q, new, phi, tbuf)
                computed += n_edges
                order = np.argsort(-phi, kind="mergesort")
            else:
                order = natural
            for i in range(n_chk):
                _layered_check(check_ptr, edge_var, post, r, q, new, order[i], tbuf)
            computed += n_edges
            if order_trace.shape[0] > 0:
                order_trace[it - 1, :] = order
        if _syndrome_ok(check_ptr, edge_var, post):
            converged = True
            if early_stop:
                break
    return it, converged, computed


@njit(cache=True)
def _refresh_check(check_ptr, edge_var, post, r, q, pend, res, cmax, cidx, c, tbuf):
    _load_inputs(check_ptr, edge_var, post, r, q, c)
    _cn_rule(check_ptr, q, pend, c, tbuf)
    m = 0.0
    mi = check_ptr[c]
    for e in range(check_ptr[c], check_ptr[c + 1]):
        d = abs(pend[e] - r[e])
        res[e] = d
        if d > m:
            m = d
            mi = e
    cmax[c] = m
    cidx[c] = mi


@njit(cache=True)
def _argmax_first(x):
    best = 0
    bv = x[0]
    for i in range(1, x.size):
        if x[i] > bv:
            bv = x[i]
            best = i
    return best


@njit(cache=True)
def _run_residual(node_wise, check_ptr, edge_var, edge_check, var_ptr, var_edges, post, r, q,
                  max_iters, early_stop):
    """RBP (edge-wise) and NWBP (node-wise). Returns iters, converged, computed, propagated."""
    n_chk = check_ptr.size - 1
    n_edges = edge_var.size
    dmax = 0
    for c in range(n_chk):
        dmax = max(dmax, check_ptr[c + 1] - check_ptr[c])
    tbuf = np.empty(2 * dmax + 2)
    pend = np.empty(n_edges)
    res = np.empty(n_edges)
    cmax = np.empty(n_chk)
    cidx = np.empty(n_chk, np.int64)
    stamp = np.zeros(n_chk, np.int64)
    touched = np.empty(n_chk, np.int64)
    for c in range(n_chk):
        _refresh_check(check_ptr, edge_var, post, r, q, pend, res, cmax, cidx, c, tbuf)
    computed = n_edges
    propagated = 0
    steps_per_iter = n_chk if node_wise else n_edges
    converged = False
    stalled = False
    it = 0
    tick = 0
    while it < max_iters:
        it += 1
        for _ in range(steps_per_iter):
            cs = _argmax_first(cmax)
            if cmax[cs] <= 0.0:
                stalled = True
                break
            tick += 1
            nt = 0
            if node_wise:
                lo = check_ptr[cs]
                hi = check_ptr[cs + 1]
            else:
                lo = cidx[cs]
                hi = lo + 1
            for e in range(lo, hi):
                delta = pend[e] - r[e]
                if delta == 0.0:
                    continue
                v = edge_var[e]
                r[e] = pend[e]
                post[v] += delta
                propagated += 1
                for j in range(var_ptr[v], var_ptr[v + 1]):
                    c2 = edge_check[var_edges[j]]
                    if c2 != cs and stamp[c2] != tick:
                        stamp[c2] = tick
                        touched[nt] = c2
                        nt += 1
            if node_wise:
                for e in range(check_ptr[cs], check_ptr[cs + 1]):
                    res[e] = 0.0
                cmax[cs] = 0.0
            else:
                res[lo] = 0.0
                m = 0.0
                mi = check_ptr[cs]
                for e in range(check_ptr[cs], check_ptr[cs + 1]):
                    if res[e] > m:
                        m = res[e]
                        mi = e
                cmax[cs] = m
                cidx[cs] = mi
            for i in range(nt):
                c2 = touched[i]
                _refresh_check(check_ptr, edge_var, post, r, q, pend, res, cmax, cidx, c2, tbuf)
                computed += check_ptr[c2 + 1] - check_ptr[c2]
        if _syndrome_ok(check_ptr, edge_var, post):
            converged = True
            if early_stop:
                break
        if stalled:
            break
    return it, converged, computed, propagated


# ---------------------------------------------------------------------------
# single-node operations

def residual(old, new):
    return np.abs(np.asarray(new, dtype=np.float64) - np.asarray(old, dtype=np.float64))


def check_rule(inputs) -> np.ndarray:
    """Tanh-rule outputs for one check given its incoming messages."""
    q = np.clip(np.asarray(inputs, dtype=np.float64), -LLR_MAX, LLR_MAX)
    out = np.empty_like(q)
    _cn_rule(np.array([0, q.size], dtype=np.int64), q, out, 0, np.empty(2 * q.size + 2))
    return out


def check_update(graph: TannerGraph, state: MessageState, check: int) -> np.ndarray:
    """Recompute and store the messages leaving ``check`` from ``state.to_check``."""
    a, b = graph.check_ptr[check], graph.check_ptr[check + 1]
    new = check_rule(state.to_check[a:b])
    np.add.at(state.posterior, graph.edge_var[a:b], new - state.to_var[a:b])
    state.to_var[a:b] = new
    return new.copy()


def variable_update(graph: TannerGraph, state: MessageState, var: int,
                    exclude_check: int | None = None) -> np.ndarray:
    """Refresh the posterior of ``var`` and regenerate its outgoing messages.

    Returns the regenerated messages in ascending check order, skipping
    ``exclude_check`` when given.
    """
    edges = graph.var_edges[graph.var_ptr[var]:graph.var_ptr[var + 1]]
    state.posterior[var] = state.channel_llr[var] + state.to_var[edges].sum()
    keep = edges if exclude_check is None else edges[graph.edge_check[edges] != exclude_check]
    state.to_check[keep] = np.clip(state.posterior[var] - state.to_var[keep], -LLR_MAX, LLR_MAX)
    return state.to_check[keep].copy()


def check_metric(graph: TannerGraph, state: MessageState, check: int) -> float:
    """Largest residual among the messages ``check`` would send right now."""
    a, b = graph.check_ptr[check], graph.check_ptr[check + 1]
    q = state.posterior[graph.edge_var[a:b]] - state.to_var[a:b]
    return float(residual(state.to_var[a:b], check_rule(q)).max(initial=0.0))


def check_metrics(graph: TannerGraph, state: MessageState) -> np.ndarray:
    phi = np.empty(graph.n_check)
    q = np.empty(graph.n_edges)
    new = np.empty(graph.n_edges)
    tbuf = np.empty(2 * int(graph.check_degrees.max()) + 2)
    _check_metrics(graph.check_ptr, graph.edge_var, state.posterior, state.to_var, q, new, phi,
                   tbuf)
    return phi


def residual_queue(phi) -> np.ndarray:
    """Check indices by descending metric; equal metrics keep index order."""
    return np.argsort(-np.asarray(phi, dtype=np.float64), kind="stable")


# ---------------------------------------------------------------------------

def decode(graph: TannerGraph, llr_in, schedule: str = "bp", max_iters: int = 20,
           early_stop: bool = True, trace: bool = False, init_to_var=None) -> DecodeResult:
    """Decode one codeword.

    Parameters
    ----------
    llr_in : array of N channel LLRs
    schedule : one of :data:`SCHEDULES`
    max_iters : iteration cap. For ``rbp`` an iteration is ``n_edges`` single
        message propagations, for ``nwbp`` ``n_check`` node updates.
    early_stop : stop after the first iteration whose hard decisions satisfy
        every parity check.
    trace : record the check visiting order of each iteration (sweep schedules).
    init_to_var : optional check-to-variable messages to resume from.
    """
    if schedule not in _SCHED_ID:
        raise ScheduleError(f"unknown schedule {schedule!r}; choose from {SCHEDULES}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    state = MessageState.initial(graph, llr_in, init_to_var)
    sid = _SCHED_ID[schedule]
    order_trace = np.zeros((max_iters if trace else 0, graph.n_check), dtype=np.int64)
    if schedule in ("rbp", "nwbp"):
        iters, conv, computed, propagated = _run_residual(
            schedule == "nwbp", graph.check_ptr, graph.edge_var, graph.edge_check,
            graph.var_ptr, graph.var_edges, state.posterior, state.to_var, state.to_check,
            max_iters, early_stop)
        order_trace = None
    else:
        iters, conv, computed = _run_sweeps(
            sid, graph.check_ptr, graph.edge_var, state.channel_llr, state.posterior,
            state.to_var, state.to_check, max_iters, early_stop, order_trace)
        propagated = iters * graph.n_edges
        order_trace = order_trace[:iters] if trace else None
    state.to_check[:] = np.clip(state.posterior[graph.edge_var] - state.to_var, -LLR_MAX, LLR_MAX)
    post = state.posterior.copy()
    return DecodeResult(
        posterior_llr=post,
        hard_bits=(post < 0).astype(np.uint8),
        inner_iters=int(iters),
        converged=bool(conv),
        messages_computed=int(computed),
        messages_propagated=int(propagated),
        state=state,
        check_order=order_trace,
    )


def edge_update_cost(schedule: str, graph: TannerGraph) -> float:
    """Complex multiplications per decoding iteration.

    Uses mean node degrees on irregular graphs. ``rbp`` has no separate cost
    figure and is charged like ``nwbp`` (each propagation refreshes the
    residuals of ``(dv-1)(dc-1)`` neighbouring messages).
    """
    if schedule not in _SCHED_ID:
        raise ScheduleError(f"unknown schedule {schedule!r}")
    dv = graph.n_edges / graph.n_var
    dc = graph.n_edges / graph.n_check
    base = dc * graph.n_check / 4.0
    return {
        "bp": base,
        "lbp": base,
        "rlbp": 2.0 * base,
        "rolbp": 3.0 * base,
        "nwbp": base * (1.0 + (dv - 1.0) * (dc - 1.0)),
        "rbp": base * (1.0 + (dv - 1.0) * (dc - 1.0)),
    }[schedule]
