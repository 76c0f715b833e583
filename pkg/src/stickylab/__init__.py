"""Numerical laboratory for sticky-reflected diffusions.

Build a model (domain + potentials + boundary weights), discretize it into a
mass vector and energy matrix, then interrogate the discrete process from
three sides: oracle maximization of the super/weak inequality rates,
randomized verification of composed rate bounds, and exact spectral decay
curves — with a jump-chain simulator closing the loop on the stationary
occupation identity.
"""

from .catalog import halfline_tau, interval_unit, shipped_models, strip_unit
from .discretize import (
    DiscreteInstance,
    Generator,
    boundary_only_instance,
    build_instance,
    generator_of,
    interior_only_instance,
)
from .errors import StickyLabError
from .mc import TrajectoryStats, ergodic_average, simulate
from .model import (
    HalfLine,
    Interval,
    ModelSpec,
    Potential,
    Strip,
    ZERO_POTENTIAL,
    model_from_config,
    model_to_config,
    partition_constants,
    power_potential,
)
from .ratefn import (
    ComparisonConstants,
    ConstantRate,
    ExpPower,
    LogPower,
    Poly,
    RateFunction,
    Tabulated,
    classify_regime,
    comparison_constants,
    decay_profile_from_wp,
    power_potential_rates,
    sp_bound_with_boundary,
    sp_bound_without_boundary,
    sp_tail_bound,
    ultracontractive_bound,
    uniform_integrability_exponent,
    wp_bound_with_boundary,
    wp_bound_without_boundary,
    wp_rate_from_decay_profile,
)
from .semigroup import (
    SpectralData,
    check_tt1_forward,
    decay_2to2,
    kernel_sup,
    norm_infty_to_2_bounds,
    tail_functional,
    ui_statistic,
)
from .verify import (
    OracleResult,
    ScalingFit,
    ViolationReport,
    calibrate_scale,
    check_super_poincare,
    check_weak_poincare,
    fit_scaling_exponent,
    poincare_constant,
    sp_oracle,
    sp_rate_cap,
    wp_oracle,
)

__version__ = "0.1.0"
