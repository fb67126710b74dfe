"""Simulation and verification of non-decreasing self-similar additive processes."""

from .distributions import (
    BetaTheta1,
    DistSpec,
    Exponential,
    Gamma,
    InverseGamma,
    ParameterError,
    PointMass,
    RngStream,
    beta_gamma_compose,
    sample,
)
from .pointproc import (
    DuplicatePointError,
    PointSet,
    Window,
    counts_in_log_bins,
    invert,
    sample_scale_invariant_ppp,
    spacings,
)
from .ssa import (
    InfiniteRateError,
    JumpTail,
    KeyFunction,
    LevelCrossing,
    SsaPath,
    hold_jump_step,
    jump_sizes_of,
    range_of,
    rate_of,
    seed_at_level_crossing,
    simulate_above_level,
    validate_log_moment,
)
from .stats import TestReport, ks_test, poisson_dispersion_test, independence_test, estimate_rate

__version__ = "0.1.0"
