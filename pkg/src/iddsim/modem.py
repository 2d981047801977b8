"""Gray-labelled QPSK: mapping, soft symbols and bit-LLR demapping.

LLR convention: ``l = ln P(b=0) / P(b=1)``.
"""

from __future__ import annotations

import numpy as np

BITS_PER_SYMBOL = 2
#: point index i has label bits (i >> 1 & 1, i & 1)
LABELS = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.uint8)
POINTS = ((1 - 2.0 * LABELS[:, 0]) + 1j * (1 - 2.0 * LABELS[:, 1])) / np.sqrt(2.0)


class FramingError(ValueError):
    pass


class DegenerateStatisticsError(ValueError):
    pass


def map_bits(bits) -> np.ndarray:
    """Map bit pairs along the last axis to unit-energy QPSK symbols."""
    bits = np.asarray(bits)
    if bits.shape[-1] % BITS_PER_SYMBOL:
        raise FramingError(f"bit count {bits.shape[-1]} is not a multiple of {BITS_PER_SYMBOL}")
    pairs = bits.reshape(*bits.shape[:-1], -1, 2).astype(np.float64)
    return ((1 - 2 * pairs[..., 0]) + 1j * (1 - 2 * pairs[..., 1])) / np.sqrt(2.0)


def hard_demap(symbols) -> np.ndarray:
    s = np.asarray(symbols)
    bits = np.stack([s.real < 0, s.imag < 0], axis=-1).astype(np.uint8)
    return bits.reshape(*s.shape[:-1], -1) if s.ndim else bits.reshape(-1)


def slice_symbols(u) -> np.ndarray:
    """Nearest QPSK point (scale-invariant hard decision)."""
    u = np.asarray(u)
    return (np.where(u.real < 0, -1.0, 1.0) + 1j * np.where(u.imag < 0, -1.0, 1.0)) / np.sqrt(2.0)


def soft_symbol(prior_llrs):
    """Mean and variance of a QPSK symbol under independent bit priors.

    ``prior_llrs`` has a trailing axis of length 2. For Gray QPSK the in-phase
    and quadrature parts each depend on one bit, so the mean is
    ``(tanh(l0/2) + j tanh(l1/2)) / sqrt(2)`` and the variance ``1 - |mean|^2``.
    """
    l = np.asarray(prior_llrs, dtype=np.float64)
    t = np.tanh(0.5 * l)
    mean = (t[..., 0] + 1j * t[..., 1]) / np.sqrt(2.0)
    var = np.clip(1.0 - np.abs(mean) ** 2, 0.0, 1.0)
    return mean, var


def demap_llr(u, gain, noise_var, priors=None, max_log: bool = False) -> np.ndarray:
    """Extrinsic bit LLRs for ``u = gain * x + eps``, ``eps ~ CN(0, noise_var)``.

    Each bit's LLR marginalises over the other bit using its prior and leaves
    out the bit's own prior. Arrays broadcast; the output gains a trailing
    axis of length 2.
    """
    u = np.asarray(u, dtype=np.complex128)
    gain = np.asarray(gain, dtype=np.complex128)
    noise_var = np.asarray(noise_var, dtype=np.float64)
    if np.any(noise_var <= 0):
        raise DegenerateStatisticsError("residual variance must be positive")
    if priors is None:
        priors = np.zeros(np.broadcast(u, gain, noise_var).shape + (2,))
    priors = np.asarray(priors, dtype=np.float64)
    # metric[..., point]
    d = u[..., None] - gain[..., None] * POINTS
    metric = -(d.real ** 2 + d.imag ** 2) / noise_var[..., None]
    signs = 1.0 - 2.0 * LABELS  # +1 for bit 0
    reduce = _max_reduce if max_log else _lse_reduce
    out = []
    for j in range(2):
        other = 1 - j
        m = metric + 0.5 * priors[..., other, None] * signs[:, other]
        zero = LABELS[:, j] == 0
        out.append(reduce(m[..., zero]) - reduce(m[..., ~zero]))
    return np.stack(out, axis=-1)


def _lse_reduce(m):
    top = m.max(axis=-1)
    return top + np.log(np.exp(m - top[..., None]).sum(axis=-1))


def _max_reduce(m):
    return m.max(axis=-1)
