"""Soft-input soft-output MMSE-SIC MIMO detector.

Layers are detected in VBLAST order (descending post-MMSE SINR). Each layer
is filtered after subtracting the soft replicas of the layers detected
before it, and its output is modelled as ``u = V x + eps`` with Gaussian
``eps`` whose statistics are estimated from the frame.

Array conventions: ``r`` is ``(T, n_rx)`` (one row per time slot), ``H`` is
``(n_fadings, n_rx, n_tx)`` and ``slot_fading`` maps each slot to its matrix.
Bit LLRs are ``(n_tx, 2T)`` in transmission order: slot ``t`` of antenna ``k``
carries bits ``2t`` and ``2t+1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoder import LLR_MAX
from .modem import (BITS_PER_SYMBOL, DegenerateStatisticsError, FramingError, demap_llr,
                    slice_symbols, soft_symbol)

VAR_FLOOR = 1e-12
#: statistics modes: time average over the best fading block, over each
#: fading block separately, or per-slot closed form from the filter
STATS_MODES = ("best-block", "per-block", "analytic")


class EstimationError(ValueError):
    pass


@dataclass
class DetectorOutput:
    """Result of one detector activation.

    ``gain`` and ``noise_var`` hold the Gaussian output model per layer and
    slot, ``order`` the SIC position of every layer per slot, ``snr_rcv`` the
    receive SNR ``1 / (2 sigma_eps^2)`` per layer over the statistics window.
    """

    l_c: np.ndarray
    l_e: np.ndarray
    u: np.ndarray
    gain: np.ndarray
    noise_var: np.ndarray
    best_fading: int
    order: np.ndarray
    snr_rcv: np.ndarray


def mmse_filter(H_k, noise_var: float, symbol_var: float = 1.0, col: int = 0) -> np.ndarray:
    """``(H_k H_k^H + noise_var / symbol_var I)^{-1} h``, ``h`` the ``col``-th column of ``H_k``.

    ``H_k`` holds the columns of the layers not yet cancelled. Broadcasts over
    leading axes.
    """
    H_k = np.asarray(H_k, dtype=np.complex128)
    n_rx = H_k.shape[-2]
    R = H_k @ np.conj(np.swapaxes(H_k, -1, -2)) + (noise_var / symbol_var) * np.eye(n_rx)
    return np.linalg.solve(R, H_k[..., :, col][..., None])[..., 0]


def soft_mmse_filter(H, weights, noise_var: float, layer: int) -> np.ndarray:
    """MMSE filter for ``layer`` when layer ``j`` contributes interference power ``weights[..., j]``.

    With ``weights`` 1 for uncancelled layers and 0 for perfectly cancelled
    ones this is :func:`mmse_filter` on the uncancelled columns; soft
    cancellation leaves residual power equal to the symbol variance.
    """
    H = np.asarray(H, dtype=np.complex128)
    n_rx = H.shape[-2]
    R = (H * weights[..., None, :]) @ np.conj(np.swapaxes(H, -1, -2)) + noise_var * np.eye(n_rx)
    return np.linalg.solve(R, H[..., :, layer][..., None])[..., 0]


def sic_cancel(r, H, soft_symbols, cancelled) -> np.ndarray:
    """``r - sum_{j in cancelled} h_j xhat_j``.

    ``cancelled`` is a boolean mask over layers (broadcasting with
    ``soft_symbols``); an empty mask returns ``r`` unchanged.
    """
    r = np.asarray(r, dtype=np.complex128)
    x = np.where(cancelled, np.asarray(soft_symbols, dtype=np.complex128), 0.0)
    return r - np.einsum("...ij,...j->...i", np.asarray(H, dtype=np.complex128), x)


def estimate_stats(u, reference=None):
    """Time-averaged ``(V, sigma_eps^2)`` of ``u = V x + eps``.

    ``reference`` holds the known or estimated symbols; by default the hard
    decisions on ``u`` are used (decision-directed). The variance is floored
    at :data:`VAR_FLOOR`.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.size == 0:
        raise EstimationError("no samples to estimate statistics from")
    x = slice_symbols(u) if reference is None else np.asarray(reference, dtype=np.complex128)
    power = np.mean(np.abs(x) ** 2)
    if power == 0:
        return 0.0, max(float(np.mean(np.abs(u) ** 2)), VAR_FLOOR)
    gain = float(np.real(np.mean(np.conj(x) * u)) / power)
    var = float(np.mean(np.abs(u - gain * x) ** 2))
    return gain, max(var, VAR_FLOOR)


def fading_metric(H) -> np.ndarray:
    """``|det H_f|`` for square matrices, ``sqrt(det(H_f^H H_f))`` otherwise."""
    H = np.asarray(H, dtype=np.complex128)
    if H.shape[-1] == H.shape[-2]:
        return np.abs(np.linalg.det(H))
    G = np.conj(np.swapaxes(H, -1, -2)) @ H
    return np.sqrt(np.abs(np.linalg.det(G)))


def best_fading(H) -> int:
    """0-based index of the fading block with the largest ``|det H_f|`` (first on ties)."""
    return int(np.argmax(fading_metric(H)))


def sinr_order(H, noise_var: float) -> np.ndarray:
    """VBLAST detection order for each matrix in ``H`` (``(..., n_rx, n_tx)``).

    At each stage the layer with the largest post-MMSE SINR among those left
    is detected next and treated as cancelled for later stages. Returns the
    layer indices in detection order, ties to the lower index.
    """
    H = np.asarray(H, dtype=np.complex128)
    batch = H.shape[:-2]
    n_rx, n_tx = H.shape[-2:]
    remaining = np.ones(batch + (n_tx,), dtype=bool)
    order = np.zeros(batch + (n_tx,), dtype=np.int64)
    rho = max(noise_var, VAR_FLOOR)
    eye = np.eye(n_rx)
    for stage in range(n_tx):
        Hr = H * remaining[..., None, :]
        R = Hr @ np.conj(np.swapaxes(Hr, -1, -2)) + rho * eye
        Rinv_H = np.linalg.solve(R, H)
        # a = h^H R^{-1} h with R including h; SINR = a / (1 - a)
        a = np.real(np.einsum("...ij,...ij->...j", np.conj(H), Rinv_H))
        sinr = a / np.maximum(1.0 - a, VAR_FLOOR)
        sinr = np.where(remaining, sinr, -np.inf)
        pick = np.argmax(sinr, axis=-1)
        order[..., stage] = pick
        np.put_along_axis(remaining, pick[..., None], False, axis=-1)
    return order


def detect_frame(r, H, noise_var: float, priors=None, slot_fading=None,
                 stats: str = "best-block", max_log: bool = False,
                 order: np.ndarray | None = None) -> DetectorOutput:
    """One SISO MMSE-SIC pass over a frame.

    Parameters
    ----------
    r : ``(T, n_rx)`` received vectors
    H : ``(n_fadings, n_rx, n_tx)`` channel matrices
    noise_var : complex noise variance
    priors : ``(n_tx, 2T)`` a priori bit LLRs from the decoder, zero if omitted
    slot_fading : ``(T,)`` fading index of each slot; defaults to one matrix
        per slot when ``n_fadings == T`` and to a single matrix otherwise
    stats : one of :data:`STATS_MODES`
    order : optional fixed detection order per fading index
        (``(n_fadings, n_tx)``); VBLAST order when omitted

    Returns
    -------
    DetectorOutput
        ``l_c = l_ext + priors`` and ``l_e = l_c - priors``, clipped to
        ``+-LLR_MAX``.
    """
    r = np.atleast_2d(np.asarray(r, dtype=np.complex128))
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim == 2:
        H = H[None]
    n_fad, n_rx, n_tx = H.shape
    T = r.shape[0]
    if r.shape[1] != n_rx:
        raise FramingError(f"received vectors have {r.shape[1]} entries, channel has {n_rx} rows")
    if slot_fading is None:
        slot_fading = np.arange(T) if n_fad == T else np.zeros(T, dtype=np.int64)
    slot_fading = np.asarray(slot_fading, dtype=np.int64)
    if slot_fading.shape != (T,) or slot_fading.min() < 0 or slot_fading.max() >= n_fad:
        raise FramingError("slot_fading must map every slot to a channel matrix")
    if priors is None:
        priors = np.zeros((n_tx, BITS_PER_SYMBOL * T))
    priors = np.asarray(priors, dtype=np.float64)
    if priors.shape != (n_tx, BITS_PER_SYMBOL * T):
        raise FramingError(f"priors must be {(n_tx, BITS_PER_SYMBOL * T)}, got {priors.shape}")
    if stats not in STATS_MODES:
        raise ValueError(f"unknown statistics mode {stats!r}; choose from {STATS_MODES}")
    # cancelled layers leave a rank-deficient covariance at zero noise
    noise_var = max(float(noise_var), VAR_FLOOR)

    prior_pairs = priors.reshape(n_tx, T, BITS_PER_SYMBOL).transpose(1, 0, 2)  # (T, n_tx, 2)
    xhat, xvar = soft_symbol(prior_pairs)  # (T, n_tx)
    if order is None:
        order = sinr_order(H, noise_var)
    order = np.asarray(order, dtype=np.int64)
    pos_f = np.argsort(order, axis=-1)  # SIC position of every layer
    pos = pos_f[slot_fading]  # (T, n_tx)
    Ht = H[slot_fading]  # (T, n_rx, n_tx)

    u = np.zeros((T, n_tx), dtype=np.complex128)
    filt_gain = np.zeros((T, n_tx))
    for k in range(n_tx):
        cancelled = pos < pos[:, k:k + 1]
        weights = np.where(cancelled, xvar, 1.0)
        w = soft_mmse_filter(Ht, weights, noise_var, k)
        r_k = sic_cancel(r, Ht, xhat, cancelled)
        u[:, k] = np.einsum("ti,ti->t", np.conj(w), r_k)
        filt_gain[:, k] = np.real(np.einsum("ti,ti->t", np.conj(w), Ht[:, :, k]))

    gain = np.zeros((T, n_tx))
    var = np.zeros((T, n_tx))
    best = best_fading(H) if n_fad < T else 0
    if stats == "analytic":
        gain[:] = filt_gain
        var[:] = np.maximum(filt_gain * (1.0 - filt_gain), VAR_FLOOR)
        window = slot_fading == best if n_fad < T else np.ones(T, dtype=bool)
    elif stats == "best-block" or n_fad == T:
        window = slot_fading == best if n_fad < T else np.ones(T, dtype=bool)
        for k in range(n_tx):
            gain[:, k], var[:, k] = estimate_stats(u[window, k])
    else:
        window = np.ones(T, dtype=bool)
        for f in np.unique(slot_fading):
            sel = slot_fading == f
            for k in range(n_tx):
                gain[sel, k], var[sel, k] = estimate_stats(u[sel, k])

    if np.any(var <= 0):
        raise DegenerateStatisticsError("residual variance must be positive")
    l_ext = demap_llr(u, gain, var, prior_pairs, max_log=max_log)  # (T, n_tx, 2)
    l_ext = np.clip(l_ext, -LLR_MAX, LLR_MAX).transpose(1, 0, 2).reshape(n_tx, -1)
    l_c = l_ext + priors
    snr_rcv = 1.0 / (2.0 * var[window].mean(axis=0))
    return DetectorOutput(l_c=l_c, l_e=l_c - priors, u=u, gain=gain, noise_var=var,
                          best_fading=best, order=order, snr_rcv=snr_rcv)
