"""Turbo loop between the MMSE-SIC detector and per-antenna LDPC decoders."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import llrcomp
from .decoder import LLR_MAX, SCHEDULES, DecodeResult, decode
from .detector import STATS_MODES, detect_frame
from .ldpc import ROOTCHECK, TannerGraph


#: where compensation acts: on the detector's a posteriori output before the
#: decoder sees it, or on the decoder extrinsic fed back as detector prior
COMPENSATION_POINTS = ("detector", "feedback")


@dataclass(frozen=True)
class IddConfig:
    """Receiver settings.

    ``persist_messages`` keeps each stream's check-to-variable messages
    across outer iterations instead of restarting from zero.
    ``compensation_point`` is one of :data:`COMPENSATION_POINTS`.
    """

    outer_iters: int = 5
    inner_iters: int = 20
    schedule: str = "bp"
    compensation: str = "off"
    stats: str = "best-block"
    max_log: bool = False
    persist_messages: bool = False
    compensation_point: str = "detector"

    def __post_init__(self):
        if self.outer_iters < 1 or self.inner_iters < 1:
            raise ValueError("iteration counts must be >= 1")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}; choose from {SCHEDULES}")
        if self.compensation not in llrcomp.MODES:
            raise ValueError(f"unknown compensation {self.compensation!r}")
        if self.stats not in STATS_MODES:
            raise ValueError(f"unknown statistics mode {self.stats!r}")
        if self.compensation_point not in COMPENSATION_POINTS:
            raise ValueError(f"unknown compensation point {self.compensation_point!r}")


@dataclass
class IddResult:
    """Per-stream decoder results of the last outer iteration plus counters."""

    streams: list[DecodeResult]
    outer_iters: int
    inner_iters: int
    messages_computed: int
    messages_propagated: int
    gamma_neg_events: int
    converged: bool
    snr_rcv: list[np.ndarray] = field(default_factory=list)

    @property
    def hard_bits(self) -> np.ndarray:
        """``(n_tx, N)`` decisions in codeword position order."""
        return np.stack([s.hard_bits for s in self.streams])


def run_idd(r, H, noise_var: float, graph: TannerGraph, cfg: IddConfig,
            slot_fading=None) -> IddResult:
    """Detect and decode one frame.

    ``r`` is ``(T, n_rx)`` with ``T = N / 2``; antenna ``k`` transmits its
    own codeword permuted by ``graph.tx_order``. Compensation is applied to
    the detector's a posteriori LLRs only for Root-Check codes.
    """
    H = np.asarray(H)
    n_tx = H.shape[-1]
    perm = graph.tx_order
    compensate = (cfg.compensation != "off" and graph.spec is not None
                  and graph.spec.kind == ROOTCHECK)
    prior_tx = np.zeros((n_tx, graph.n_var))
    to_var = [None] * n_tx
    streams: list[DecodeResult] = []
    inner = computed = propagated = gamma_neg = 0
    snr_rcv = []
    outer = 0
    converged = False
    for outer in range(1, cfg.outer_iters + 1):
        det = detect_frame(r, H, noise_var, prior_tx, slot_fading,
                           stats=cfg.stats, max_log=cfg.max_log)
        snr_rcv.append(det.snr_rcv)
        streams = []
        next_prior = np.empty_like(prior_tx)
        for k in range(n_tx):
            # back to codeword position order
            l_c = np.empty(graph.n_var)
            l_c[perm] = det.l_c[k]
            l_a = np.empty(graph.n_var)
            l_a[perm] = prior_tx[k]
            if compensate and cfg.compensation_point == "detector":
                res = llrcomp.apply(l_c, graph.k, cfg.compensation)
                gamma_neg += int(not res.applied)
                l_c = res.llr
            l_e = l_c - l_a
            dec = decode(graph, l_e, cfg.schedule, cfg.inner_iters,
                         init_to_var=to_var[k] if cfg.persist_messages else None)
            if cfg.persist_messages:
                to_var[k] = dec.state.to_var
            streams.append(dec)
            inner += dec.inner_iters
            computed += dec.messages_computed
            propagated += dec.messages_propagated
            l_in = np.clip(l_e, -LLR_MAX, LLR_MAX)
            ext = np.clip(dec.posterior_llr - l_in, -LLR_MAX, LLR_MAX)
            if compensate and cfg.compensation_point == "feedback":
                res = llrcomp.apply(ext, graph.k, cfg.compensation)
                gamma_neg += int(not res.applied)
                ext = res.llr
            next_prior[k] = ext[perm]
        prior_tx = next_prior
        if all(s.converged for s in streams):
            converged = True
            break
    return IddResult(streams=streams, outer_iters=outer, inner_iters=inner,
                     messages_computed=computed, messages_propagated=propagated,
                     gamma_neg_events=gamma_neg, converged=converged, snr_rcv=snr_rcv)
