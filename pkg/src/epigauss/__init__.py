"""Gaussian epigraph calculus and the semi-discrete Gaussian Minkowski solver."""

from .convex_core import (
    BoxDomain,
    DiscreteMeasure,
    GridFunction,
    MeasureValidationError,
    PLConvexFunction,
    ValidatedMeasure,
    WeightPair,
    convexity_violation,
    eval_function,
    fenchel_young_residual,
    gradient,
    is_coercive,
    lower_convex_envelope,
    pl_box_indicator,
    pl_point_indicator,
    pl_polygon_indicator,
    support_function,
    validate_measure,
)
from .gauss_functionals import (
    MomentMeasureEstimate,
    SphericalMeasureEstimate,
    epigraph_volume,
    gauss_coeff,
    gaussian_body_volume,
    moment_measure,
    regular_polygon,
    spherical_measure,
    total_moment_mass,
    weighted_epigraph_volume,
)
from .minkowski_solver import (
    MinkowskiProblem,
    SolverConfig,
    SolverResult,
    constraint_gradient,
    constraint_value,
    monge_ampere_residual,
    phi_star_of,
    project_shift,
    solve,
    verify_solution,
)
from .numerics import (
    QuadratureConfig,
    box_integral,
    erfc,
    gauss_tail,
    gauss_tail_array,
    pairwise_sum,
    set_threads,
)
from .transform import (
    conjugate_pl,
    inf_convolution,
    inf_convolution_pl,
    legendre_nd,
    llt_1d,
    pl_conjugate,
    right_scale,
)
from .variation import (
    ConditionCertificate,
    VariationReport,
    berman_derivative_residual,
    check_condition,
    delta_gamma_closed,
    delta_gamma_numeric,
    delta_gamma_self,
    delta_gamma_self_boundary,
    scaling_identity_residual,
    variation_report,
)

__version__ = "0.1.0"
