"""Dense SPD linear algebra: jittered Cholesky factorization and solves.

Every posterior and likelihood computation in this package funnels through
these four operations.  Matrices are dense row-major float64; problem sizes
stay in the low hundreds, so nothing fancier is warranted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular


class NotPositiveDefinite(Exception):
    """Matrix could not be factorized even after maximum jitter escalation."""


class DimensionMismatch(Exception):
    """Operand shapes do not conform."""


# Relative diagonal jitter: start small, escalate x10 on failure, give up at the cap.
JITTER_INITIAL = 1e-10
JITTER_MAX = 1e-4

_SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor of ``m + jitter * I`` for an SPD matrix ``m``."""

    lower: np.ndarray
    jitter: float

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def cholesky(matrix: np.ndarray) -> CholeskyFactor:
    """Factor a symmetric positive-definite matrix, escalating diagonal jitter.

    The jitter starts at ``JITTER_INITIAL * mean(diag)`` and is multiplied by
    10 on each pivot failure up to ``JITTER_MAX * mean(diag)``.  Raises
    :class:`NotPositiveDefinite` if every attempt fails.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    scale = max(float(np.abs(m).max()), 1.0) if m.size else 1.0
    if m.size and float(np.abs(m - m.T).max()) > _SYMMETRY_RTOL * scale:
        raise NotPositiveDefinite("matrix is not symmetric")
    diag = np.diag(m)
    if m.size and diag.min() <= 0.0:
        raise NotPositiveDefinite("matrix has a non-positive diagonal entry")

    base = JITTER_INITIAL * float(diag.mean()) if m.size else 0.0
    n_steps = int(round(np.log10(JITTER_MAX / JITTER_INITIAL)))
    eye = np.eye(m.shape[0])
    for k in range(n_steps + 1):
        jitter = base * 10.0**k
        try:
            lower = np.linalg.cholesky(m + jitter * eye)
        except np.linalg.LinAlgError:
            continue
        return CholeskyFactor(lower=lower, jitter=jitter)
    raise NotPositiveDefinite(
        f"pivot failure persists at maximum jitter {base * 10.0**n_steps:.3e}"
    )


def solve(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Solve ``(L L^T) x = b`` for a vector or matrix right-hand side."""
    rhs = np.asarray(b, dtype=float)
    if rhs.shape[0] != factor.dim:
        raise DimensionMismatch(
            f"rhs has leading dimension {rhs.shape[0]}, factor has {factor.dim}"
        )
    return cho_solve((factor.lower, True), rhs)


def log_det(factor: CholeskyFactor) -> float:
    """Log-determinant of the factored matrix: ``2 * sum(log diag(L))``."""
    return 2.0 * float(np.log(np.diag(factor.lower)).sum())


def quadratic_form(factor: CholeskyFactor, y: np.ndarray) -> float:
    """Return ``y^T (L L^T)^{-1} y``; nonnegative by construction."""
    vec = np.asarray(y, dtype=float)
    if vec.ndim != 1 or vec.shape[0] != factor.dim:
        raise DimensionMismatch(
            f"vector has shape {vec.shape}, factor has dim {factor.dim}"
        )
    w = solve_triangular(factor.lower, vec, lower=True)
    return float(w @ w)
