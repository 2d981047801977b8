"""Monte Carlo BER simulation, complexity accounting and CSV output.

Frame ``i`` at SNR ``s`` draws its message bits, channel and noise from
``default_rng([seed, key(s), i])``. Because the stream does not depend on the
receiver configuration, two scenarios simulated with the same seed see
identical frames, which makes their BER comparison paired.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .channel import SystemConfig, draw_channel, noise_variance, transmit
from .decoder import SCHEDULES, edge_update_cost
from .idd import IddConfig, run_idd
from .ldpc import (ROOTCHECK, STANDARD, SUPPORTED_ROOTCHECK_RATES, CodeSpec, TannerGraph,
                   build_code, encode)
from .llrcomp import MODES as COMP_MODES
from .modem import BITS_PER_SYMBOL, map_bits

CSV_HEADER = ("snr_db", "ber", "fer", "frames", "bit_errors", "mean_inner_iters",
              "mean_outer_iters", "complex_mults", "wall_time_s", "gamma_neg_events")
_INT_COLUMNS = {"frames", "bit_errors", "gamma_neg_events"}
_SNR_KEY_OFFSET = 1_000_000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """Everything that defines one BER curve except the SNR grid.

    ``code_blocks`` is the number of fading blocks the code is designed for;
    it defaults to ``n_blocks`` for block fading and to 2 for fast fading.
    """

    n_tx: int = 2
    n_rx: int = 2
    n: int = 1024
    rate: Fraction = Fraction(1, 2)
    code: str = ROOTCHECK
    n_blocks: int = 2
    fast: bool = False
    schedule: str = "bp"
    compensation: str = "off"
    outer_iters: int = 5
    inner_iters: int = 20
    stats: str = "best-block"
    max_log: bool = False
    persist_messages: bool = False
    fading_index_ntx: bool = False
    code_blocks: int | None = None
    code_seed: int = 0
    compensation_point: str = "detector"

    def __post_init__(self):
        object.__setattr__(self, "rate", Fraction(self.rate).limit_denominator(64))
        try:
            self.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def validate(self) -> None:
        if self.code not in (STANDARD, ROOTCHECK):
            raise ValueError(f"unknown code kind {self.code!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.compensation not in COMP_MODES:
            raise ValueError(f"unknown compensation {self.compensation!r}")
        if self.code == ROOTCHECK:
            f = self.design_blocks
            if self.rate not in SUPPORTED_ROOTCHECK_RATES or self.rate * f > 1 or f < 2:
                raise ValueError(f"Root-Check codes need rate 1/2 or 1/4 with rate <= 1/F; "
                                 f"got rate {self.rate} and F={f}")
        self.code_spec()
        self.system()
        self.idd()

    @property
    def design_blocks(self) -> int:
        if self.code_blocks is not None:
            return self.code_blocks
        return 2 if self.fast else self.n_blocks

    def code_spec(self) -> CodeSpec:
        return CodeSpec.from_rate(self.n, self.rate, self.design_blocks, self.code)

    def system(self) -> SystemConfig:
        return SystemConfig(self.n_tx, self.n_rx, self.n, self.n_blocks, self.fast,
                            self.fading_index_ntx)

    def idd(self) -> IddConfig:
        return IddConfig(self.outer_iters, self.inner_iters, self.schedule, self.compensation,
                         self.stats, self.max_log, self.persist_messages,
                         self.compensation_point)

    def label(self) -> str:
        comp = "" if self.code == STANDARD or self.compensation == "off" else f"+{self.compensation}"
        return f"{self.code}{comp}-{self.schedule}"


@dataclass(frozen=True)
class StopRule:
    """Frames are simulated in batches of ``batch``; the rule is checked after each batch.

    ``fixed_frames`` overrides the error target. Otherwise a point stops once
    it has ``target_errors`` bit errors and ``min_frame_errors`` frame errors,
    or after ``max_frames`` frames.
    """

    target_errors: int = 200
    max_frames: int = 100_000
    fixed_frames: int | None = None
    min_frame_errors: int = 0
    batch: int = 16

    def done(self, frames: int, bit_errors: int, frame_errors: int) -> bool:
        if self.fixed_frames is not None:
            return frames >= self.fixed_frames
        if frames >= self.max_frames:
            return True
        return bit_errors >= self.target_errors and frame_errors >= self.min_frame_errors

    def next_batch(self, frames: int) -> int:
        cap = self.fixed_frames if self.fixed_frames is not None else self.max_frames
        return max(0, min(self.batch, cap - frames))


@dataclass
class SimRecord:
    snr_db: float
    ber: float
    fer: float
    frames: int
    bit_errors: int
    mean_inner_iters: float
    mean_outer_iters: float
    complex_mults: float
    wall_time_s: float
    gamma_neg_events: int

    def __post_init__(self):
        for name in _INT_COLUMNS:
            setattr(self, name, int(getattr(self, name)))


@dataclass
class _Counts:
    frames: int = 0
    bit_errors: int = 0
    frame_errors: int = 0
    inner: int = 0
    outer: int = 0
    gamma_neg: int = 0

    def add(self, other: "_Counts") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))


@lru_cache(maxsize=16)
def cached_code(spec: CodeSpec, seed: int = 0) -> TannerGraph:
    return build_code(spec, seed=seed)


def frame_rng(seed: int, snr_db: float, frame: int) -> np.random.Generator:
    # noiseless points get their own key past any finite SNR
    key = int(round(snr_db * 1000)) + _SNR_KEY_OFFSET if math.isfinite(snr_db) \
        else 2 * _SNR_KEY_OFFSET + (snr_db > 0)
    return np.random.default_rng([int(seed), key, int(frame)])


def simulate_frame(sc: Scenario, graph: TannerGraph, snr_db: float,
                   rng: np.random.Generator) -> _Counts:
    """Transmit and receive one frame; returns its error and iteration counts."""
    system = sc.system()
    msg = rng.integers(0, 2, size=(sc.n_tx, graph.k), dtype=np.uint8)
    H = draw_channel(rng, system)
    cw = encode(graph, msg)
    x = map_bits(cw[:, graph.tx_order]).T  # (T, n_tx)
    slots = system.slot_fading()
    sigma2 = noise_variance(snr_db, sc.n_tx, float(sc.rate), BITS_PER_SYMBOL)
    r = transmit(x, H[slots], sigma2, rng)
    if sigma2 == 0:
        sigma2 = 1e-12
    res = run_idd(r, H, sigma2, graph, sc.idd(), slot_fading=slots)
    errs = int(np.count_nonzero(res.hard_bits[:, :graph.k] != msg))
    return _Counts(frames=1, bit_errors=errs, frame_errors=int(errs > 0),
                   inner=res.inner_iters, outer=res.outer_iters,
                   gamma_neg=res.gamma_neg_events)


def _run_batch(args) -> _Counts:
    sc, snr_db, seed, start, count = args
    graph = cached_code(sc.code_spec(), sc.code_seed)
    total = _Counts()
    for i in range(start, start + count):
        total.add(simulate_frame(sc, graph, snr_db, frame_rng(seed, snr_db, i)))
    return total


def _record(sc: Scenario, graph: TannerGraph, snr_db: float, c: _Counts,
            wall: float) -> SimRecord:
    bits = c.frames * graph.k * sc.n_tx
    return SimRecord(
        snr_db=float(snr_db),
        ber=c.bit_errors / bits if bits else 0.0,
        fer=c.frame_errors / c.frames if c.frames else 0.0,
        frames=c.frames,
        bit_errors=c.bit_errors,
        mean_inner_iters=c.inner / (c.frames * sc.n_tx) if c.frames else 0.0,
        mean_outer_iters=c.outer / c.frames if c.frames else 0.0,
        complex_mults=edge_update_cost(sc.schedule, graph) * c.inner / c.frames if c.frames else 0.0,
        wall_time_s=wall,
        gamma_neg_events=c.gamma_neg,
    )


def run_point(sc: Scenario, snr_db: float, stop: StopRule, seed: int = 0,
              pool: ProcessPoolExecutor | None = None, workers: int = 1) -> SimRecord:
    """Simulate one SNR point until ``stop`` fires.

    Batches are consumed in index order and the rule is evaluated after each
    one, so the frame count does not depend on ``workers``.
    """
    graph = cached_code(sc.code_spec(), sc.code_seed)
    t0 = time.perf_counter()
    counts = _Counts()
    while not stop.done(counts.frames, counts.bit_errors, counts.frame_errors):
        if pool is None:
            n = stop.next_batch(counts.frames)
            counts.add(_run_batch((sc, snr_db, seed, counts.frames, n)))
            continue
        # dispatch several batches at once; only consume them up to the stop point
        jobs, start = [], counts.frames
        for _ in range(workers):
            n = stop.next_batch(start)
            if n == 0:
                break
            jobs.append((sc, snr_db, seed, start, n))
            start += n
        for part in pool.map(_run_batch, jobs):
            if stop.done(counts.frames, counts.bit_errors, counts.frame_errors):
                break
            counts.add(part)
    return _record(sc, graph, snr_db, counts, time.perf_counter() - t0)


def run_sweep(sc: Scenario, snrs, stop: StopRule | None = None, seed: int = 0,
              workers: int = 1, progress=None) -> list[SimRecord]:
    """Simulate every SNR in ``snrs``; records come back sorted by SNR."""
    stop = stop or StopRule()
    cached_code(sc.code_spec(), sc.code_seed)
    records = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for snr in sorted(float(s) for s in snrs):
            rec = run_point(sc, snr, stop, seed, pool, workers)
            records.append(rec)
            if progress is not None:
                progress(rec)
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def parse_snr_range(text: str) -> list[float]:
    """``"start:step:stop"`` (inclusive), a comma list, or a single value."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0:
            raise ConfigError(f"bad SNR range {text!r}; expected start:step:stop with step > 0")
        start, step, stop = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 9) for i in range(max(count, 0))]
    return [float(p) for p in text.split(",") if p.strip()]


def _fmt(name: str, value) -> str:
    if name in _INT_COLUMNS:
        return str(int(value))
    return f"{float(value):.5e}"


def emit_csv(records) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_HEADER) + "\n")
    for rec in sorted(records, key=lambda r: r.snr_db):
        row = asdict(rec)
        out.write(",".join(_fmt(name, row[name]) for name in CSV_HEADER) + "\n")
    return out.getvalue()


def parse_csv(text: str) -> list[SimRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [SimRecord(**{k: (int(v) if k in _INT_COLUMNS else float(v)) for k, v in row.items()})
            for row in reader]


def snr_at_ber(records, target: float = 1e-3, bits_per_frame: int | None = None) -> float:
    """SNR where the BER curve first drops to ``target``.

    Interpolates linearly in ``log10(BER)`` between the bracketing points. A
    point without errors is given the BER ``0.5 / (frames * bits_per_frame)``,
    or ``target / 100`` when the frame size is unknown. Returns NaN if the
    curve never reaches the target.
    """
    prev = None
    for rec in sorted(records, key=lambda r: r.snr_db):
        ber = rec.ber
        if rec.bit_errors == 0:
            ber = 0.5 / (rec.frames * bits_per_frame) if bits_per_frame and rec.frames \
                else target / 100.0
        if ber <= target:
            if prev is None:
                return float(rec.snr_db)
            hi, lo = math.log10(prev[1]), math.log10(ber)
            frac = (hi - math.log10(target)) / (hi - lo) if hi != lo else 0.0
            return float(prev[0] + frac * (rec.snr_db - prev[0]))
        prev = (rec.snr_db, ber)
    return float("nan")


# ---------------------------------------------------------------------------
# presets

#: system setups of the three reference experiments; curves pick code,
#: schedule and compensation on top of these
FIGURES: dict[int, dict] = {
    1: dict(n_tx=2, n_rx=2, rate=Fraction(1, 2), n_blocks=2, fast=False,
            snr=(0.0, 1.0, 12.0)),
    2: dict(n_tx=4, n_rx=4, rate=Fraction(1, 4), n_blocks=2, fast=False,
            snr=(-4.0, 1.0, 8.0)),
    3: dict(n_tx=2, n_rx=2, rate=Fraction(1, 2), n_blocks=2, fast=True,
            snr=(-2.0, 0.5, 6.0)),
}

#: (code, schedule, compensation) curves plotted for each preset
FIGURE_CURVES: dict[int, list[tuple[str, str, str]]] = {
    1: [(ROOTCHECK, s, c) for c in ("on", "off") for s in ("bp", "lbp", "rolbp")]
       + [(STANDARD, s, "off") for s in ("bp", "lbp", "rolbp")],
    2: [(ROOTCHECK, s, "on") for s in ("bp", "lbp", "rolbp")]
       + [(STANDARD, s, "off") for s in ("bp", "lbp", "rolbp")],
    3: [(ROOTCHECK, s, "on") for s in ("bp", "lbp", "rolbp")]
       + [(STANDARD, "bp", "off")],
}


def figure_scenario(fig: int, **overrides) -> Scenario:
    if fig not in FIGURES:
        raise ConfigError(f"unknown figure preset {fig}; choose from {sorted(FIGURES)}")
    base = {k: v for k, v in FIGURES[fig].items() if k != "snr"}
    base.update(overrides)
    return Scenario(**base)


def figure_snrs(fig: int) -> list[float]:
    start, step, stop = FIGURES[fig]["snr"]
    return parse_snr_range(f"{start}:{step}:{stop}")


def with_curve(sc: Scenario, code: str, schedule: str, compensation: str) -> Scenario:
    return replace(sc, code=code, schedule=schedule, compensation=compensation)
