"""Dense GF(2) linear algebra on bit-packed rows.

Rows are stored as Python integers (bit ``j`` = column ``j``), which keeps
Gauss-Jordan elimination on ~10^3 x 10^3 matrices well under a second.
"""

from __future__ import annotations

import numpy as np


def rows_to_ints(mat: np.ndarray) -> list[int]:
    mat = np.asarray(mat, dtype=np.uint8) & 1
    packed = np.packbits(mat, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def ints_to_rows(rows: list[int], n_cols: int) -> np.ndarray:
    n_bytes = (n_cols + 7) // 8
    buf = b"".join(r.to_bytes(n_bytes, "little") for r in rows)
    packed = np.frombuffer(buf, dtype=np.uint8).reshape(len(rows), n_bytes)
    return np.unpackbits(packed, axis=1, count=n_cols, bitorder="little")


def rank(mat: np.ndarray) -> int:
    rows = rows_to_ints(mat)
    n_cols = np.shape(mat)[1]
    r = 0
    for col in range(n_cols):
        bit = 1 << col
        pivot = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        p = rows[r]
        for i in range(r + 1, len(rows)):
            if rows[i] & bit:
                rows[i] ^= p
        r += 1
        if r == len(rows):
            break
    return r


def inverse(mat: np.ndarray) -> np.ndarray | None:
    """Inverse of a square GF(2) matrix, or ``None`` when it is singular."""
    mat = np.asarray(mat)
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {mat.shape}")
    rows = [r | (1 << (n + i)) for i, r in enumerate(rows_to_ints(mat))]
    for col in range(n):
        bit = 1 << col
        pivot = next((i for i in range(col, n) if rows[i] & bit), None)
        if pivot is None:
            return None
        rows[col], rows[pivot] = rows[pivot], rows[col]
        p = rows[col]
        for i in range(n):
            if i != col and rows[i] & bit:
                rows[i] ^= p
    return ints_to_rows([r >> n for r in rows], n)
