"""Shared test oracles, deliberately independent of the library's own paths."""

from __future__ import annotations

import numpy as np


def gauss_jordan_inverse(matrix: np.ndarray) -> np.ndarray:
    """Naive Gauss-Jordan inversion with partial pivoting; no numpy.linalg."""
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    aug = np.hstack([a, np.eye(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[pivot, col]) == 0.0:
            raise ZeroDivisionError("singular matrix")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]


def quartiles_by_sorting(values: np.ndarray) -> tuple[float, float, float]:
    """Quartiles via explicit sorting and linear interpolation between order
    statistics (the same convention numpy's default percentile uses)."""
    srt = np.sort(np.asarray(values, dtype=float))
    n = srt.size
    out = []
    for q in (0.25, 0.50, 0.75):
        pos = q * (n - 1)
        lo = int(np.floor(pos))
        hi = int(np.ceil(pos))
        frac = pos - lo
        out.append(srt[lo] * (1 - frac) + srt[hi] * frac)
    return tuple(out)
