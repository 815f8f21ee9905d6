"""Gaussian and Student's-T densities, CDFs, and samplers.

The univariate functions are vectorized over their first argument so the
acquisition layer can sweep large query grids in one call.  All samplers take
an explicit ``numpy.random.Generator``; there is no module-level RNG state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gammaln, ndtr

from .linalg import DimensionMismatch, cholesky, log_det, quadratic_form

GAUSSIAN = "gaussian"
STUDENT_T = "student_t"

_LOG_2PI = float(np.log(2.0 * np.pi))


class InvalidParameter(Exception):
    """Parameter outside its admissible domain."""


@dataclass(frozen=True)
class UnivariateMarginal:
    """Location/scale marginal at one query point.

    ``scale`` is the raw scale parameter: the standard deviation for the
    Gaussian family, the shape scale for Student-T (standard deviation is
    ``scale * sqrt(nu / (nu - 2))``).  A zero scale marks a fully observed
    point.
    """

    family: str
    mu: float
    scale: float
    nu: float | None = None

    def __post_init__(self) -> None:
        if self.family not in (GAUSSIAN, STUDENT_T):
            raise InvalidParameter(f"unknown family {self.family!r}")
        if not (np.isfinite(self.scale) and self.scale >= 0):
            raise InvalidParameter(f"scale must be nonnegative, got {self.scale}")
        if self.family == STUDENT_T and (self.nu is None or self.nu <= 0):
            raise InvalidParameter(f"student_t marginal requires nu > 0, got {self.nu}")


@dataclass(frozen=True)
class MvtParams:
    """Parameters of a multivariate Student's-T: location, shape matrix, dof.

    The shape matrix is not the covariance; covariance is
    ``nu / (nu - 2) * shape`` and only exists for ``nu > 2``.  The density
    itself is valid for any ``nu > 0``, which the mode-value checks rely on.
    """

    mu: np.ndarray
    shape: np.ndarray
    nu: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float).ravel())
        object.__setattr__(self, "shape", np.asarray(self.shape, dtype=float))
        if self.nu <= 0:
            raise InvalidParameter(f"nu must be positive, got {self.nu}")
        if self.shape.shape != (self.mu.size, self.mu.size):
            raise DimensionMismatch(
                f"shape matrix {self.shape.shape} does not match mu of length {self.mu.size}"
            )

    @property
    def dim(self) -> int:
        return self.mu.size

    def covariance(self) -> np.ndarray:
        if self.nu <= 2:
            raise InvalidParameter("covariance requires nu > 2")
        return self.nu / (self.nu - 2.0) * self.shape


def std_normal_pdf(z):
    """Standard normal density."""
    z = np.asarray(z, dtype=float)
    with np.errstate(over="ignore"):  # huge z: exp(-inf) saturates to 0
        out = np.exp(-0.5 * z**2) / np.sqrt(2.0 * np.pi)
    return out if out.ndim else float(out)


def std_normal_cdf(z):
    """Standard normal CDF via the complementary error function."""
    out = ndtr(np.asarray(z, dtype=float))
    return out if out.ndim else float(out)


def std_t_pdf(z, nu: float):
    """Standard Student-T density with ``nu`` degrees of freedom."""
    if nu <= 0:
        raise InvalidParameter(f"nu must be positive, got {nu}")
    z = np.asarray(z, dtype=float)
    log_norm = gammaln((nu + 1.0) / 2.0) - gammaln(nu / 2.0) - 0.5 * np.log(nu * np.pi)
    with np.errstate(over="ignore"):
        out = np.exp(log_norm - (nu + 1.0) / 2.0 * np.log1p(z**2 / nu))
    return out if out.ndim else float(out)


def std_t_cdf(z, nu: float):
    """Standard Student-T CDF via the regularized incomplete beta function."""
    if nu <= 0:
        raise InvalidParameter(f"nu must be positive, got {nu}")
    z = np.asarray(z, dtype=float)
    with np.errstate(over="ignore"):  # z**2 -> inf collapses the beta argument to 0
        tail = 0.5 * betainc(nu / 2.0, 0.5, nu / (nu + z**2))
    out = np.where(z <= 0, tail, 1.0 - tail)
    return out if out.ndim else float(out)


def mvt_logpdf(y: np.ndarray, p: MvtParams) -> float:
    """Log-density of a multivariate Student's-T at ``y``."""
    vec = np.asarray(y, dtype=float).ravel()
    if vec.size != p.dim:
        raise DimensionMismatch(f"y has length {vec.size}, expected {p.dim}")
    factor = cholesky(p.shape)
    maha = quadratic_form(factor, vec - p.mu)
    d = p.dim
    return float(
        gammaln((p.nu + d) / 2.0)
        - gammaln(p.nu / 2.0)
        - d / 2.0 * np.log(p.nu * np.pi)
        - 0.5 * log_det(factor)
        - (p.nu + d) / 2.0 * np.log1p(maha / p.nu)
    )


def mvg_logpdf(y: np.ndarray, mu: np.ndarray, cov: np.ndarray) -> float:
    """Log-density of a multivariate Gaussian at ``y``."""
    vec = np.asarray(y, dtype=float).ravel()
    loc = np.asarray(mu, dtype=float).ravel()
    if vec.size != loc.size:
        raise DimensionMismatch(f"y has length {vec.size}, mu has length {loc.size}")
    factor = cholesky(cov)
    if factor.dim != vec.size:
        raise DimensionMismatch(f"cov has dim {factor.dim}, y has length {vec.size}")
    maha = quadratic_form(factor, vec - loc)
    return float(-0.5 * (vec.size * _LOG_2PI + log_det(factor) + maha))


def sample_mvg(
    mu: np.ndarray,
    cov: np.ndarray,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Draw from a multivariate Gaussian as ``mu + L z``.

    With ``size=None`` returns one vector; otherwise a ``(size, d)`` matrix.
    """
    loc = np.asarray(mu, dtype=float).ravel()
    factor = cholesky(cov)
    if factor.dim != loc.size:
        raise DimensionMismatch(f"cov has dim {factor.dim}, mu has length {loc.size}")
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, loc.size))
    draws = loc + z @ factor.lower.T
    return draws[0] if size is None else draws


def sample_mvt(
    p: MvtParams,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Draw from a multivariate Student's-T as ``mu + (L z) * sqrt(nu / u)``.

    ``u`` is a chi-square draw with ``nu`` degrees of freedom, shared across
    the coordinates of each sample.
    """
    factor = cholesky(p.shape)
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, p.dim))
    u = rng.chisquare(p.nu, size=n)
    draws = p.mu + (z @ factor.lower.T) * np.sqrt(p.nu / u)[:, None]
    return draws[0] if size is None else draws
