"""Covariate-shift toolkit built around the ball-mass similarity measure.

The package quantifies how hard a source/target distribution pair makes
nonparametric regression on [0, 1]: the similarity ``rho_h`` (the target
expectation of the reciprocal source ball mass) drives both the risk of
the ball-kernel local-average estimator and the hardness constructions
that show the resulting rates cannot be improved.
"""

from .distributions import (
    DeclaredFamily,
    Distribution,
    HardPairParams,
    Mixture,
    PiecewiseConstantDensity,
    PiecewiseConstantHard,
    PointMass,
    PowerDensity,
    ReversePower,
    SourceTargetPair,
    Uniform,
    bounded_ratio_pair,
    hard_pair_big,
    hard_pair_small,
    load_pair,
    mixture_of_pair,
    pair_from_config,
    pair_to_config,
    power_pair,
    save_pair,
)
from .errors import CovshiftError, DomainError, UnsupportedOperationError
from .experiments import (
    BandwidthRule,
    RateSpec,
    RateTable,
    SlopeFit,
    effective_sample_size,
    fit_slope,
    rate_spec_from_config,
    run_rates,
)
from .geometry import (
    MetricSpace,
    covering_bound_cube,
    covering_number_interval,
    interval_cover_centers,
)
from .lowerbound import (
    BinaryCode,
    PackingParams,
    bump,
    bump_squared_integral,
    calibrate_packing_radius,
    calibrate_two_point_offset,
    gilbert_varshamov_code,
    holder_certificate,
    kl_divergence,
    l2_norm_sq,
    packing_function,
    packing_kl_report,
    packing_params_for_pair,
    two_point_function,
    two_point_kl_report,
)
from .regression import (
    Dataset,
    HolderParams,
    NWModel,
    bound_for_pair,
    fit_nw,
    gen_dataset,
    mean_inverse_hit_count,
    mean_inverse_hit_count_bound,
    mse_under_target,
    mse_upper_bound,
    optimal_bandwidth,
)
from .similarity import (
    FamilyReport,
    RhoEstimate,
    TransferReport,
    default_h_grid,
    default_x_grid,
    fit_transfer_constant,
    integrate_against,
    min_ball_ratio,
    rho,
    transfer_exponent_holds,
    verify_family,
    verify_transfer_inclusion,
)

__version__ = "0.1.0"
