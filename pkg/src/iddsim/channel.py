"""Block-fading and fast-fading MIMO channels with circular Gaussian noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modem import BITS_PER_SYMBOL


@dataclass(frozen=True)
class SystemConfig:
    """Antenna and fading layout of one frame.

    Every transmit antenna carries its own codeword of ``n`` bits, so a frame
    spans ``n / m`` channel uses (time slots) and ``n_tx * n / m`` symbols.
    ``n_blocks`` is the number of independent fading blocks per frame; with
    ``fast=True`` every time slot gets its own channel matrix.
    """

    n_tx: int = 2
    n_rx: int = 2
    n: int = 1024
    n_blocks: int = 2
    fast: bool = False
    fading_index_ntx: bool = False

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna counts must be positive")
        if self.n % BITS_PER_SYMBOL:
            raise ValueError("codeword length must be a multiple of the bits per symbol")
        if not self.fast and self.time_slots % self.n_blocks:
            raise ValueError(f"{self.time_slots} time slots do not split into "
                             f"{self.n_blocks} fading blocks")

    @property
    def time_slots(self) -> int:
        return self.n // BITS_PER_SYMBOL

    @property
    def symbols_per_frame(self) -> int:
        return self.n_tx * self.time_slots

    @property
    def fading_count(self) -> int:
        return self.time_slots if self.fast else self.n_blocks

    def slot_fading(self) -> np.ndarray:
        """0-based fading index of every time slot."""
        if self.fast:
            return np.arange(self.time_slots)
        antennas = self.n_tx if self.fading_index_ntx else self.n_rx
        t = np.arange(1, self.time_slots + 1)
        return np.array([fading_index(int(s), self.n_blocks, antennas, self.symbols_per_frame)
                         for s in t]) - 1


def fading_index(t: int, n_blocks: int, n_antennas: int, n_symbols: int) -> int:
    """1-based fading block of time instant ``t``: ``ceil(F * n_antennas * t / L)``.

    ``n_antennas`` is the receive antenna count as the formula is usually
    written; pass the transmit count for the alternative reading. The result
    is clamped to ``[1, F]``.
    """
    f = math.ceil(n_blocks * n_antennas * t / n_symbols)
    return min(max(f, 1), n_blocks)


def noise_variance(snr_db: float, n_tx: int, rate: float,
                   bits_per_symbol: int = BITS_PER_SYMBOL, symbol_energy: float = 1.0) -> float:
    """Complex noise variance for ``SNR = n_tx * Es / (R * m * N0)``."""
    if np.isinf(snr_db) and snr_db > 0:
        return 0.0
    return n_tx * symbol_energy / (float(rate) * bits_per_symbol * 10.0 ** (snr_db / 10.0))


def complex_gaussian(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channel(rng: np.random.Generator, cfg: SystemConfig) -> np.ndarray:
    """``(fading_count, n_rx, n_tx)`` i.i.d. CN(0, 1) gains."""
    return complex_gaussian(rng, (cfg.fading_count, cfg.n_rx, cfg.n_tx))


def transmit(x, H, noise_var: float, rng: np.random.Generator) -> np.ndarray:
    """``r = H x + v``. ``x`` is ``(..., n_tx)`` and ``H`` ``(..., n_rx, n_tx)``."""
    x = np.asarray(x, dtype=np.complex128)
    H = np.asarray(H, dtype=np.complex128)
    clean = np.einsum("...ij,...j->...i", H, x)
    if noise_var == 0:
        return clean
    return clean + complex_gaussian(rng, clean.shape, noise_var)
