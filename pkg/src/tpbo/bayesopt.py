"""The optimization driver: initial design, normalization, bandwidth selection
by marginal likelihood, EI maximization, and stopping rules.

A campaign runs entirely in normalized coordinates: inputs and outputs are
rescaled to zero mean and unit variance, refreshed every ``renormalize_every``
acquisition steps together with a fresh two-stage bandwidth grid search.
Traces record raw coordinates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .acquisition import gaussian_ei_values, student_t_ei_values
from .distributions import (
    GAUSSIAN,
    STUDENT_T,
    InvalidParameter,
    MvtParams,
    mvg_logpdf,
    mvt_logpdf,
)
from .kernels import KernelSpec, kernel_matrix
from .objectives import ObjectiveHandle
from .processes import Dataset, ProcessModel, SurrogateFit, fit_surrogate

BUDGET_EXHAUSTED = "budget_exhausted"
TOLERANCE_REACHED = "tolerance_reached"

# Sample standard deviations below this are treated as degenerate: the
# dimension is centered but left unscaled.
VARIANCE_FLOOR = 1e-12


class DegenerateDataWarning(UserWarning):
    """All observed values in some dimension are (numerically) identical."""


@dataclass(frozen=True)
class NormalizationTransform:
    """Affine map taking raw data to zero mean and unit variance per dimension."""

    input_means: np.ndarray
    input_stds: np.ndarray
    output_mean: float
    output_std: float
    degenerate_outputs: bool = False

    def apply_inputs(self, x: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(np.asarray(x, dtype=float)) - self.input_means) / self.input_stds

    def invert_inputs(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) * self.input_stds + self.input_means

    def apply_outputs(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.output_mean) / self.output_std

    def invert_outputs(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=float) * self.output_std + self.output_mean

    def apply(self, data: Dataset) -> Dataset:
        return Dataset(self.apply_inputs(data.inputs), self.apply_outputs(data.outputs))

    def apply_bounds(self, bounds: np.ndarray) -> np.ndarray:
        b = np.asarray(bounds, dtype=float)
        return (b - self.input_means[:, None]) / self.input_stds[:, None]


@dataclass(frozen=True)
class BandwidthGrid:
    """Two-stage log10-bandwidth grid search specification."""

    log10_low: float = -3.0
    log10_high: float = 3.0
    points: int = 11


@dataclass(frozen=True)
class StepRecord:
    """One objective evaluation: raw input, raw output, incumbent, model state."""

    step: int
    x: np.ndarray
    y: float
    y_best: float
    bandwidth: float | None = None
    scale_factor: float | None = None


@dataclass(frozen=True)
class CampaignTrace:
    records: list[StepRecord]
    status: str

    @property
    def best_so_far(self) -> np.ndarray:
        return np.array([r.y_best for r in self.records])


@dataclass(frozen=True)
class CampaignConfig:
    """Everything one optimization campaign needs besides the objective.

    The acquisition budget defaults to 100 proposals after the initial design
    (``max_acquisitions``); ``max_evaluations`` optionally caps the total
    evaluation count, initial design included.
    """

    process: ProcessModel
    bounds: np.ndarray | None = None
    n_initial: int = 20
    max_acquisitions: int | None = 100
    max_evaluations: int | None = None
    renormalize_every: int = 10
    stop_tolerance: float = 1e-4
    optimum_value: float | None = None
    grid_points_per_dim: int = 101
    candidate_pool: int = 10_000
    bandwidth_grid: BandwidthGrid = field(default_factory=BandwidthGrid)
    refine: bool = True
    refine_max_iter: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_initial < 2:
            raise InvalidParameter("n_initial must be at least 2 (normalization needs spread)")
        if self.renormalize_every < 1:
            raise InvalidParameter("renormalize_every must be positive")
        if self.grid_points_per_dim < 2 or self.candidate_pool < 1:
            raise InvalidParameter("grid and candidate pool sizes must be positive")
        if self.bounds is not None:
            b = np.asarray(self.bounds, dtype=float).reshape(-1, 2)
            if (b[:, 0] >= b[:, 1]).any():
                raise InvalidParameter("each bound must satisfy low < high")
            object.__setattr__(self, "bounds", b)


def latin_hypercube(n: int, bounds: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Stratified space-filling design: one sample per axis-aligned stratum."""
    if n < 1:
        raise InvalidParameter("need at least one sample")
    b = np.asarray(bounds, dtype=float).reshape(-1, 2)
    d = b.shape[0]
    u = rng.random((n, d))
    pts = np.empty((n, d))
    for j in range(d):
        strata = (rng.permutation(n) + u[:, j]) / n
        pts[:, j] = b[j, 0] + strata * (b[j, 1] - b[j, 0])
    return pts


def fit_normalization(data: Dataset) -> NormalizationTransform:
    """Per-dimension affine rescaling to mean 0, variance 1.

    Dimensions whose sample standard deviation falls below the variance floor
    are centered but not scaled, and a :class:`DegenerateDataWarning` is
    emitted when that happens to the outputs.
    """
    if len(data) < 2:
        raise InvalidParameter("normalization needs at least two observations")
    in_means = data.inputs.mean(axis=0)
    in_stds = data.inputs.std(axis=0)
    degenerate_inputs = in_stds <= VARIANCE_FLOOR
    in_stds = np.where(degenerate_inputs, 1.0, in_stds)
    out_mean = float(data.outputs.mean())
    out_std = float(data.outputs.std())
    degenerate_outputs = out_std <= VARIANCE_FLOOR
    if degenerate_outputs:
        out_std = 1.0
        warnings.warn(
            "all observed outputs are identical; centering without scaling",
            DegenerateDataWarning,
            stacklevel=2,
        )
    if degenerate_inputs.any():
        warnings.warn(
            f"input dimensions {np.flatnonzero(degenerate_inputs).tolist()} are "
            "degenerate; centering without scaling",
            DegenerateDataWarning,
            stacklevel=2,
        )
    return NormalizationTransform(
        input_means=in_means,
        input_stds=in_stds,
        output_mean=out_mean,
        output_std=out_std,
        degenerate_outputs=bool(degenerate_outputs),
    )


def gp_log_marginal_likelihood(data: Dataset, kernel: KernelSpec) -> float:
    """Log probability of the outputs under the mean-zero Gaussian prior."""
    k = kernel_matrix(kernel, data.inputs, data.inputs)
    return mvg_logpdf(data.outputs, np.zeros(len(data)), k)


def stp_log_marginal_likelihood(data: Dataset, kernel: KernelSpec, nu: float) -> float:
    """Log probability of the outputs under the mean-zero Student-T prior.

    The prior shape is (nu - 2) / nu times the kernel matrix, so the prior
    covariance equals the kernel matrix itself.
    """
    if nu <= 2:
        raise InvalidParameter(f"marginal likelihood requires nu > 2, got {nu}")
    k = kernel_matrix(kernel, data.inputs, data.inputs)
    shape = (nu - 2.0) / nu * k
    return mvt_logpdf(data.outputs, MvtParams(mu=np.zeros(len(data)), shape=shape, nu=nu))


def _log_likelihood(data: Dataset, process: ProcessModel, bandwidth: float) -> float:
    kernel = KernelSpec(bandwidth=bandwidth, family=process.kernel.family)
    if process.family == STUDENT_T:
        return stp_log_marginal_likelihood(data, kernel, process.nu)
    return gp_log_marginal_likelihood(data, kernel)


def select_bandwidth(
    data: Dataset, process: ProcessModel, grid: BandwidthGrid = BandwidthGrid()
) -> float:
    """Two-stage grid search over log10 bandwidth, maximizing marginal likelihood.

    Stage one scans evenly spaced points across the full log range; stage two
    re-grids the interval between the stage-one argmax's immediate neighbors
    (clamped at the range edges) with the same number of points.  Ties break
    toward the smaller bandwidth.
    """
    stage1 = np.linspace(grid.log10_low, grid.log10_high, grid.points)
    ll1 = [_log_likelihood(data, process, 10.0**c) for c in stage1]
    i = int(np.argmax(ll1))
    lo = stage1[max(i - 1, 0)]
    hi = stage1[min(i + 1, grid.points - 1)]
    stage2 = np.linspace(lo, hi, grid.points)
    ll2 = [_log_likelihood(data, process, 10.0**c) for c in stage2]
    j = int(np.argmax(ll2))
    return float(10.0 ** stage2[j])


def _ei_of(fit: SurrogateFit, query: np.ndarray, y_best: float) -> np.ndarray:
    mu, scale = fit.predict(query)
    if fit.model.family == STUDENT_T:
        return student_t_ei_values(mu, scale, fit.nu_hat, y_best)
    return gaussian_ei_values(mu, scale, y_best)


def _candidate_grid(bounds: np.ndarray, points_per_dim: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, points_per_dim) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def propose_next(
    model: ProcessModel,
    data: Dataset,
    bounds: np.ndarray,
    config: CampaignConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Return the in-bounds point with the greatest expected improvement.

    Up to two input dimensions the EI surface is scanned on a full grid;
    above that, on a Latin-hypercube candidate pool.  The best candidate
    seeds a bounded Nelder-Mead refinement of negated EI; the refined point
    is kept only if it actually improves on the candidate.
    """
    b = np.asarray(bounds, dtype=float).reshape(-1, 2)
    d = b.shape[0]
    fit = fit_surrogate(model, data)
    y_best = float(data.outputs.min())
    if d <= 2:
        candidates = _candidate_grid(b, config.grid_points_per_dim)
    else:
        candidates = latin_hypercube(config.candidate_pool, b, rng)
    ei = _ei_of(fit, candidates, y_best)
    best = int(np.argmax(ei))  # first (lowest) flat index wins ties
    x0, ei0 = candidates[best], float(ei[best])
    if not config.refine:
        return x0

    def neg_ei(x: np.ndarray) -> float:
        clipped = np.clip(x, b[:, 0], b[:, 1])
        return -float(_ei_of(fit, clipped[None, :], y_best)[0])

    # Initial simplex: the candidate plus one vertex per dimension offset by
    # 1% of that dimension's width, stepping inward at the upper edge.
    widths = b[:, 1] - b[:, 0]
    simplex = np.tile(x0, (d + 1, 1))
    for j in range(d):
        step = 0.01 * widths[j]
        simplex[j + 1, j] += step if x0[j] + step <= b[j, 1] else -step
    try:
        res = minimize(
            neg_ei,
            x0,
            method="Nelder-Mead",
            options={"maxiter": config.refine_max_iter, "initial_simplex": simplex},
        )
        refined = np.clip(res.x, b[:, 0], b[:, 1])
        ei_ref = float(_ei_of(fit, refined[None, :], y_best)[0])
    except Exception:
        return x0
    return refined if ei_ref > ei0 else x0


def run_campaign(objective: ObjectiveHandle, config: CampaignConfig) -> CampaignTrace:
    """Run one full optimization campaign against an objective handle.

    Latin-hypercube initialization, then acquisition steps until the budget
    runs out or the incumbent is within ``stop_tolerance`` of the known
    optimum.  Every ``renormalize_every`` steps data are re-normalized and the
    bandwidth is re-selected.  Given a deterministic objective, the whole
    trace is a deterministic function of the config.
    """
    bounds = config.bounds if config.bounds is not None else objective.bounds
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    rng = np.random.default_rng(config.seed)

    xs = latin_hypercube(config.n_initial, bounds, rng)
    ys = np.array([objective.evaluate(x) for x in xs])
    records: list[StepRecord] = []
    best = np.inf
    for i, (x, y) in enumerate(zip(xs, ys)):
        best = min(best, float(y))
        records.append(StepRecord(step=i, x=x.copy(), y=float(y), y_best=best))

    def tolerance_met() -> bool:
        return (
            config.optimum_value is not None
            and best - config.optimum_value <= config.stop_tolerance
        )

    if tolerance_met():
        return CampaignTrace(records=records, status=TOLERANCE_REACHED)

    transform: NormalizationTransform | None = None
    bandwidth: float | None = None
    acq = 0
    while True:
        if config.max_acquisitions is not None and acq >= config.max_acquisitions:
            return CampaignTrace(records=records, status=BUDGET_EXHAUSTED)
        if config.max_evaluations is not None and len(records) >= config.max_evaluations:
            return CampaignTrace(records=records, status=BUDGET_EXHAUSTED)

        raw = Dataset(xs, ys)
        if acq % config.renormalize_every == 0 or transform is None:
            transform = fit_normalization(raw)
            bandwidth = select_bandwidth(
                transform.apply(raw), config.process, config.bandwidth_grid
            )
        data_n = transform.apply(raw)
        bounds_n = transform.apply_bounds(bounds)
        model = replace(
            config.process,
            kernel=KernelSpec(bandwidth=bandwidth, family=config.process.kernel.family),
        )
        scale_factor = fit_surrogate(model, data_n).scale_factor
        x_n = propose_next(model, data_n, bounds_n, config, rng)
        x_raw = np.clip(transform.invert_inputs(x_n), bounds[:, 0], bounds[:, 1])
        y_new = objective.evaluate(x_raw)

        xs = np.vstack([xs, x_raw[None, :]])
        ys = np.append(ys, y_new)
        best = min(best, float(y_new))
        records.append(
            StepRecord(
                step=len(records),
                x=x_raw.copy(),
                y=float(y_new),
                y_best=best,
                bandwidth=bandwidth,
                scale_factor=scale_factor,
            )
        )
        acq += 1
        if tolerance_met():
            return CampaignTrace(records=records, status=TOLERANCE_REACHED)
