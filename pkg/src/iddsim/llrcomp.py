"""Parity-LLR shifting for Root-Check codes on block-fading channels.

After detection the systematic LLRs of a Root-Check code are reliable (every
information bit keeps a path to an unfaded block) while parity LLRs often sit
near zero. The compensation raises every parity magnitude by
``gamma = alpha - beta``, where ``alpha`` and ``beta`` are the largest
systematic and parity magnitudes, so the strongest parity LLR matches the
strongest systematic one. Signs never change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODES = ("off", "on", "wcnc")


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class CompensationResult:
    alpha: float
    beta: float
    gamma: float
    parity_abs: np.ndarray
    parity_sign: np.ndarray
    parity_shifted: np.ndarray
    llr: np.ndarray
    applied: bool

    @property
    def gamma_negative(self) -> bool:
        return self.gamma < 0


def _split(l_c, k: int):
    l_c = np.asarray(l_c, dtype=np.float64)
    if l_c.ndim != 1:
        raise PartitionError("expected a single LLR vector")
    if not 1 <= k < l_c.size:
        raise PartitionError(f"systematic length {k} must satisfy 1 <= K < N = {l_c.size}")
    return l_c, l_c[:k], l_c[k:]


def _sign(x: np.ndarray) -> np.ndarray:
    # sign(0) := +1
    return np.where(x < 0, -1.0, 1.0)


def compensate(l_c, k: int) -> CompensationResult:
    """Shift parity magnitudes by ``gamma = max|sys| - max|par|``.

    When ``gamma < 0`` the vector is returned unchanged and ``applied`` is
    False so callers can count the event.
    """
    l_c, sys, par = _split(l_c, k)
    alpha = float(np.max(np.abs(sys)))
    beta = float(np.max(np.abs(par)))
    gamma = alpha - beta
    p_abs = np.abs(par)
    p_sign = _sign(par)
    if gamma < 0:
        return CompensationResult(alpha, beta, gamma, p_abs, p_sign, par.copy(), l_c.copy(), False)
    shifted = (p_abs + gamma) * p_sign
    return CompensationResult(alpha, beta, gamma, p_abs, p_sign, shifted,
                              np.concatenate([sys, shifted]), True)


def compensate_wcnc(l_c, k: int) -> CompensationResult:
    """Degenerate variant with ``beta = 0`` and zero parity magnitudes: parity -> ``sign * alpha``."""
    l_c, sys, par = _split(l_c, k)
    alpha = float(np.max(np.abs(sys)))
    p_sign = _sign(par)
    shifted = alpha * p_sign
    return CompensationResult(alpha, 0.0, alpha, np.zeros_like(par), p_sign, shifted,
                              np.concatenate([sys, shifted]), True)


def apply(l_c, k: int, mode: str) -> CompensationResult | None:
    """Dispatch on ``mode`` in :data:`MODES`; ``"off"`` returns None."""
    if mode == "off":
        return None
    if mode == "on":
        return compensate(l_c, k)
    if mode == "wcnc":
        return compensate_wcnc(l_c, k)
    raise ValueError(f"unknown compensation mode {mode!r}; choose from {MODES}")
