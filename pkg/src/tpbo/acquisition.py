"""Analytic expected improvement for Gaussian and Student-T marginals.

Improvement is measured against the incumbent minimum with zero margin.  At
zero predictive scale both formulas degenerate; the well-defined limit
``max(y_best - mu, 0)`` is returned instead.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .distributions import (
    GAUSSIAN,
    STUDENT_T,
    InvalidParameter,
    UnivariateMarginal,
    std_normal_cdf,
    std_normal_pdf,
    std_t_cdf,
)
from .processes import PosteriorPredictive


def gaussian_ei_values(mu, scale, y_best: float) -> np.ndarray:
    """Vectorized Gaussian EI: ``(y_best - mu) * Phi(z) + scale * phi(z)``."""
    mu = np.asarray(mu, dtype=float)
    scale = np.asarray(scale, dtype=float)
    mu, scale = np.broadcast_arrays(mu, scale)
    gap = y_best - mu
    safe = np.where(scale > 0, scale, 1.0)
    with np.errstate(over="ignore"):
        z = gap / safe
        ei = gap * std_normal_cdf(z) + scale * std_normal_pdf(z)
    return np.where(scale > 0, ei, np.maximum(gap, 0.0))


def student_t_ei_values(mu, scale, nu: float, y_best: float) -> np.ndarray:
    """Vectorized Student-T EI.

    ``(y_best - mu) * F(z) + nu / (nu - 1) * (1 + z^2 / nu) * scale * f(z)``
    with F and f the standard-T CDF and PDF.  The second term is evaluated in
    log space (the ``1 + z^2 / nu`` factor folds into the density's exponent),
    which keeps extreme ``z`` from producing inf * 0.  The formula has a pole
    at nu = 1, below which the expectation does not exist.
    """
    if nu <= 1:
        raise InvalidParameter(f"student_t EI requires nu > 1, got {nu}")
    mu = np.asarray(mu, dtype=float)
    scale = np.asarray(scale, dtype=float)
    mu, scale = np.broadcast_arrays(mu, scale)
    gap = y_best - mu
    safe = np.where(scale > 0, scale, 1.0)
    log_norm = (
        gammaln((nu + 1.0) / 2.0) - gammaln(nu / 2.0) - 0.5 * np.log(nu * np.pi)
    )
    with np.errstate(over="ignore"):
        z = gap / safe
        log_tail = (
            np.log(nu / (nu - 1.0)) + log_norm - (nu - 1.0) / 2.0 * np.log1p(z**2 / nu)
        )
        ei = gap * std_t_cdf(z, nu) + scale * np.exp(log_tail)
    return np.where(scale > 0, ei, np.maximum(gap, 0.0))


def ei_gaussian(m: UnivariateMarginal, y_best: float) -> float:
    """Expected improvement of a Gaussian marginal over the incumbent."""
    if m.family != GAUSSIAN:
        raise InvalidParameter(f"expected a gaussian marginal, got {m.family}")
    return float(gaussian_ei_values(m.mu, m.scale, y_best))


def ei_student_t(m: UnivariateMarginal, y_best: float) -> float:
    """Expected improvement of a Student-T marginal over the incumbent."""
    if m.family != STUDENT_T:
        raise InvalidParameter(f"expected a student_t marginal, got {m.family}")
    return float(student_t_ei_values(m.mu, m.scale, m.nu, y_best))


def ei_surface(posterior: PosteriorPredictive, y_best: float) -> np.ndarray:
    """Elementwise EI over a joint predictive's marginals."""
    scale = np.sqrt(np.clip(np.diag(posterior.shape), 0.0, None))
    if posterior.mu.size == 0:
        return np.empty(0)
    if posterior.family == STUDENT_T:
        return student_t_ei_values(posterior.mu, scale, posterior.nu_hat, y_best)
    return gaussian_ei_values(posterior.mu, scale, y_best)
