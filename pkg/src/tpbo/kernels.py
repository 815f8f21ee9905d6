"""Kernel functions and kernel-matrix assembly shared by both surrogates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .linalg import DimensionMismatch

SQUARED_EXPONENTIAL = "squared_exponential"

_FAMILIES = (SQUARED_EXPONENTIAL,)


@dataclass(frozen=True)
class KernelSpec:
    """Isotropic squared-exponential kernel with a single bandwidth.

    The bandwidth is expressed in normalized input-space units; campaign code
    normalizes raw coordinates before any kernel evaluation.
    """

    bandwidth: float
    family: str = SQUARED_EXPONENTIAL

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth}")


def kernel_eval(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> float:
    """Evaluate ``exp(-||a - b||^2 / (2 * bandwidth^2))`` for two points."""
    pa = np.asarray(a, dtype=float).ravel()
    pb = np.asarray(b, dtype=float).ravel()
    if pa.shape != pb.shape:
        raise DimensionMismatch(f"points have shapes {pa.shape} and {pb.shape}")
    d2 = float(((pa - pb) ** 2).sum())
    return float(np.exp(-d2 / (2.0 * spec.bandwidth**2)))


def kernel_matrix(spec: KernelSpec, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Pairwise kernel evaluations; entry (i, j) couples rows[i] with cols[j].

    With ``rows is cols`` the result is symmetric with unit diagonal, ready
    for the jittered Cholesky in :mod:`tpbo.linalg`.
    """
    r = np.atleast_2d(np.asarray(rows, dtype=float))
    c = np.atleast_2d(np.asarray(cols, dtype=float))
    if r.shape[1] != c.shape[1]:
        raise DimensionMismatch(
            f"row points have dim {r.shape[1]}, col points have dim {c.shape[1]}"
        )
    d2 = cdist(r, c, metric="sqeuclidean")
    return np.exp(-d2 / (2.0 * spec.bandwidth**2))
