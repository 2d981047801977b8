"""BER-curve figures rendered from simulation records."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_ber(curves: dict, path, title: str = "", target: float | None = 1e-3) -> Path:
    """Write a semilog BER-vs-SNR figure, one line per ``{label: records}`` entry.

    Points without bit errors are left out since they have no finite log.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for label, records in curves.items():
        pts = sorted((r.snr_db, r.ber) for r in records if r.ber > 0)
        if not pts:
            continue
        xs, ys = zip(*pts)
        ax.semilogy(xs, ys, marker="o", label=label)
    if target is not None:
        ax.axhline(target, color="0.6", lw=0.8, ls=":")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    if curves:
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
