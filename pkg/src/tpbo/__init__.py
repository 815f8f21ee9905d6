"""Bayesian optimization with Student's-T and Gaussian process surrogates."""

from .acquisition import ei_gaussian, ei_student_t, ei_surface
from .bayesopt import (
    BandwidthGrid,
    CampaignConfig,
    CampaignTrace,
    NormalizationTransform,
    StepRecord,
    fit_normalization,
    gp_log_marginal_likelihood,
    latin_hypercube,
    propose_next,
    run_campaign,
    select_bandwidth,
    stp_log_marginal_likelihood,
)
from .distributions import (
    GAUSSIAN,
    STUDENT_T,
    MvtParams,
    UnivariateMarginal,
    mvg_logpdf,
    mvt_logpdf,
    sample_mvg,
    sample_mvt,
    std_normal_cdf,
    std_normal_pdf,
    std_t_cdf,
    std_t_pdf,
)
from .kernels import KernelSpec, kernel_eval, kernel_matrix
from .objectives import (
    EvalOutcome,
    ExternalObjective,
    ObjectiveHandle,
    PenaltySpec,
    make_objective,
    penalty_wrap,
    rosenbrock,
    six_hump_camel,
)
from .processes import (
    Dataset,
    PosteriorPredictive,
    ProcessModel,
    fit_surrogate,
    gp_posterior,
    predictive_marginals,
    sample_posterior_paths,
    sample_prior_paths,
    stp_posterior,
)

__version__ = "0.1.0"
