"""Gaussian and Student's-T process priors with closed-form posterior updates.

Both surrogates share the same mean update; the Student's-T posterior differs
by a data-dependent multiplier on the covariance,

    (nu + y^T K^{-1} y - 2) / (nu + n - 2),

which exceeds 1 exactly when the observed outputs vary more than the matching
Gaussian prior expects.  Degrees of freedom grow with the data: nu_hat = nu + n.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    GAUSSIAN,
    STUDENT_T,
    InvalidParameter,
    MvtParams,
    UnivariateMarginal,
    sample_mvg,
    sample_mvt,
)
from .kernels import KernelSpec, kernel_matrix
from .linalg import CholeskyFactor, cholesky, quadratic_form, solve

logger = logging.getLogger(__name__)


class EmptyDataset(Exception):
    """Posterior conditioning requires at least one observation."""


@dataclass(frozen=True)
class ProcessModel:
    """Mean-zero process prior: kernel plus family tag (and dof for Student-T)."""

    kernel: KernelSpec
    family: str = GAUSSIAN
    nu: float | None = None

    def __post_init__(self) -> None:
        if self.family not in (GAUSSIAN, STUDENT_T):
            raise InvalidParameter(f"unknown process family {self.family!r}")
        if self.family == STUDENT_T:
            if self.nu is None or self.nu <= 2:
                raise InvalidParameter(
                    f"student_t process requires nu > 2 for a finite covariance, got {self.nu}"
                )
            if self.nu <= 4:
                logger.info(
                    "process dof nu=%.3g is in (2, 4]: variance is finite but kurtosis is not",
                    self.nu,
                )


@dataclass(frozen=True)
class Dataset:
    """Observed inputs (n, d) and outputs (n,)."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.asarray(self.outputs, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise InvalidParameter(
                f"{x.shape[0]} input points but {y.shape[0]} outputs"
            )
        if x.size and not np.isfinite(x).all():
            raise InvalidParameter("inputs contain non-finite values")
        if y.size and not np.isfinite(y).all():
            raise InvalidParameter("outputs contain non-finite values")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "outputs", y)

    def __len__(self) -> int:
        return self.outputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class PosteriorPredictive:
    """Joint predictive at a query set: location vector plus shape matrix.

    For the Gaussian family ``shape`` is the posterior covariance and
    ``scale_factor`` is 1.  For Student-T, ``shape`` is the T shape matrix
    (covariance times (nu_hat - 2) / nu_hat) and ``scale_factor`` records the
    data-dependent covariance multiplier.
    """

    family: str
    mu: np.ndarray
    shape: np.ndarray
    scale_factor: float = 1.0
    nu_hat: float | None = None


@dataclass(frozen=True)
class SurrogateFit:
    """Cached kernel factorization for one dataset.

    The Cholesky factor and the weight vector ``K^{-1} y`` are reused by every
    prediction; refitting per proposal is cheap at the problem sizes here.
    """

    model: ProcessModel
    data: Dataset
    factor: CholeskyFactor = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    scale_factor: float
    nu_hat: float | None
    shape_fraction: float

    def predict(self, query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Marginal location and scale per query point, without the joint shape.

        Returns ``(mu, scale)`` arrays of length m; scale is the per-point
        square root of the shape diagonal, floored at zero.
        """
        q = np.atleast_2d(np.asarray(query, dtype=float))
        if q.shape[0] == 0:
            return np.empty(0), np.empty(0)
        k_cross = kernel_matrix(self.model.kernel, q, self.data.inputs)
        mu = k_cross @ self.alpha
        v = solve(self.factor, k_cross.T)
        prior_diag = np.ones(q.shape[0])  # k(x, x) = 1 for the SE kernel
        var = prior_diag - np.einsum("ij,ij->j", k_cross.T, v)
        var = np.clip(var * self.shape_fraction * self.scale_factor, 0.0, None)
        return mu, np.sqrt(var)

    def joint(self, query: np.ndarray) -> PosteriorPredictive:
        """Full joint predictive (shape matrix included) at the query points."""
        q = np.atleast_2d(np.asarray(query, dtype=float))
        if q.shape[0] == 0:
            return PosteriorPredictive(
                family=self.model.family,
                mu=np.empty(0),
                shape=np.empty((0, 0)),
                scale_factor=self.scale_factor,
                nu_hat=self.nu_hat,
            )
        k_cross = kernel_matrix(self.model.kernel, q, self.data.inputs)
        mu = k_cross @ self.alpha
        k_query = kernel_matrix(self.model.kernel, q, q)
        schur = k_query - k_cross @ solve(self.factor, k_cross.T)
        schur = 0.5 * (schur + schur.T)
        shape = self.shape_fraction * self.scale_factor * schur
        return PosteriorPredictive(
            family=self.model.family,
            mu=mu,
            shape=shape,
            scale_factor=self.scale_factor,
            nu_hat=self.nu_hat,
        )


def fit_surrogate(
    model: ProcessModel, data: Dataset, shape_dof: str = "posterior"
) -> SurrogateFit:
    """Factor the observed-point kernel matrix and cache posterior ingredients.

    ``shape_dof`` selects which degrees of freedom convert the Student-T
    posterior shape to covariance units: ``"posterior"`` (default) uses
    nu_hat = nu + n, ``"prior"`` keeps the prior nu.  The two agree as nu
    grows; the default keeps covariance semantics stable under repeated
    conditioning.
    """
    if len(data) == 0:
        raise EmptyDataset("cannot condition on an empty dataset")
    if shape_dof not in ("posterior", "prior"):
        raise InvalidParameter(f"shape_dof must be 'posterior' or 'prior', got {shape_dof!r}")
    k_obs = kernel_matrix(model.kernel, data.inputs, data.inputs)
    factor = cholesky(k_obs)
    alpha = solve(factor, data.outputs)
    if model.family == STUDENT_T:
        n = len(data)
        maha = quadratic_form(factor, data.outputs)
        scale_factor = (model.nu + maha - 2.0) / (model.nu + n - 2.0)
        nu_hat = model.nu + n
        dof = nu_hat if shape_dof == "posterior" else model.nu
        fraction = (dof - 2.0) / dof
    else:
        scale_factor = 1.0
        nu_hat = None
        fraction = 1.0
    return SurrogateFit(
        model=model,
        data=data,
        factor=factor,
        alpha=alpha,
        scale_factor=scale_factor,
        nu_hat=nu_hat,
        shape_fraction=fraction,
    )


def gp_posterior(
    model: ProcessModel, data: Dataset, query: np.ndarray
) -> PosteriorPredictive:
    """Gaussian posterior at the query points."""
    if model.family != GAUSSIAN:
        raise InvalidParameter(f"gp_posterior requires a gaussian model, got {model.family}")
    return fit_surrogate(model, data).joint(query)


def stp_posterior(
    model: ProcessModel,
    data: Dataset,
    query: np.ndarray,
    shape_dof: str = "posterior",
) -> PosteriorPredictive:
    """Student's-T posterior at the query points.

    The location update is identical to the Gaussian one; the shape carries
    the data-dependent scale factor and nu_hat = nu + n degrees of freedom.
    """
    if model.family != STUDENT_T:
        raise InvalidParameter(f"stp_posterior requires a student_t model, got {model.family}")
    return fit_surrogate(model, data, shape_dof=shape_dof).joint(query)


def predictive_marginals(p: PosteriorPredictive) -> list[UnivariateMarginal]:
    """Per-query-point marginals from a joint predictive.

    Negative round-off on the shape diagonal is clipped to zero, so the scale
    at an observed point collapses to (at most) the jitter level.
    """
    scales = np.sqrt(np.clip(np.diag(p.shape), 0.0, None))
    nu = p.nu_hat if p.family == STUDENT_T else None
    return [
        UnivariateMarginal(family=p.family, mu=float(m), scale=float(s), nu=nu)
        for m, s in zip(p.mu, scales)
    ]


def sample_prior_paths(
    model: ProcessModel,
    grid: np.ndarray,
    n_draws: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw prior realizations over a grid; one row per draw.

    Student-T draws use the shape (nu - 2) / nu * K so that the draw
    covariance matches the kernel matrix K, same as the Gaussian family.
    """
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    if pts.shape[0] == 0:
        raise InvalidParameter("grid must contain at least one point")
    if n_draws == 0:
        return np.empty((0, pts.shape[0]))
    k = kernel_matrix(model.kernel, pts, pts)
    zero = np.zeros(pts.shape[0])
    if model.family == GAUSSIAN:
        return sample_mvg(zero, k, rng, size=n_draws)
    shape = (model.nu - 2.0) / model.nu * k
    return sample_mvt(MvtParams(mu=zero, shape=shape, nu=model.nu), rng, size=n_draws)


def sample_posterior_paths(
    model: ProcessModel,
    data: Dataset,
    grid: np.ndarray,
    n_draws: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Condition on the data, then draw posterior realizations over a grid."""
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    post = fit_surrogate(model, data).joint(pts)
    if n_draws == 0:
        return np.empty((0, pts.shape[0]))
    if post.family == GAUSSIAN:
        return sample_mvg(post.mu, post.shape, rng, size=n_draws)
    params = MvtParams(mu=post.mu, shape=post.shape, nu=post.nu_hat)
    return sample_mvt(params, rng, size=n_draws)
