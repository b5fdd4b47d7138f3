"""Confidence sets for divergence projections of a data-generating law onto a
working parametric model, built by inverting split-sample tests of relative fit."""

from .distributions import (
    Distribution,
    ParametricFamily,
    bernoulli,
    bernoulli_family,
    categorical,
    gaussian,
    gaussian_location_family,
    gaussian_location_scale_family,
    gaussian_mixture,
    negbin_from_mean_dispersion,
    poisson,
    poisson_family,
)
from .divergences import (
    DP,
    HELLINGER,
    KL,
    MMD,
    TV,
    W1,
    DivergenceTag,
    GridSpec,
    KernelSpec,
    approx_projection_set,
    default_nu,
    divergence,
    divergence_profile,
    project,
    rho_hausdorff,
    yatracos_set,
)
from .relfit import StatisticSpec, statistic_for, summarize
from .bounds import (
    BentkusRule,
    BernsteinRule,
    EmpiricalBentkusRule,
    EmpiricalBernsteinRule,
    HoeffdingRule,
    RediNormalRule,
    SplitLrtRule,
    bentkus_quantile,
)
from .pilot import PilotSpec, fit_min_distance, fit_mle
from .confset import ConfidenceSet, CrossfitRule, SplitSample, crossfit_set, invert_grid, invert_rays, slrt_rule, split
from .simharness import (
    CoverageReport,
    ExperimentConfig,
    contamination_config,
    example1_regression,
    example2_regression,
    overdispersion_config,
    run_experiment,
)

__version__ = "0.1.0"
