"""finslerlab: a numerical laboratory for smooth Finsler metrics.

Build a :class:`MetricSpec`, integrate geodesics, transport vectors,
evaluate flag curvature, and run the rigidity criteria that connect
Berwald metrics, nonpositive flag curvature, and Busemann convexity.
"""

from .classify import (
    ClassificationReport,
    ClassifyConfig,
    busemann_convexity_sample,
    binet_legendre_field,
    binet_legendre_metric,
    classify_report,
    holonomy_sample,
    jacobi_convexity_witness,
    kappa_defect,
    norm_preservation_test,
    transport_invariance_of_aux,
)
from .curvature import (
    FlagData,
    flag_curvature,
    flag_data,
    jacobi_spectrum,
    nonpositivity_scan,
)
from .errors import (
    BVPError,
    DegeneracyError,
    DomainError,
    EvaluationError,
    FinslerError,
    InputError,
    IntegrationError,
    QuadratureError,
    SamplingError,
    SpecError,
    ValidationError,
)
from .geodesics import (
    DistanceResult,
    GeodesicTrace,
    exp_map,
    integrate_geodesic,
    local_distance,
)
from .metrics import (
    Box,
    MetricSpec,
    eval_norm,
    load_spec,
    save_spec,
    validate_spec,
)
from .spray import (
    FundamentalTensor,
    SprayData,
    berwald_curvature_operator,
    fundamental_tensor,
    spray_coefficients,
)
from .transport import (
    JacobiFieldData,
    ParallelFrame,
    covariant_derivative,
    jacobi_by_ode,
    jacobi_by_variation,
    osculating_cross_check,
    parallel_transport,
    small_time_expansion_check,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Box",
    "MetricSpec",
    "eval_norm",
    "validate_spec",
    "load_spec",
    "save_spec",
    "FundamentalTensor",
    "SprayData",
    "fundamental_tensor",
    "spray_coefficients",
    "berwald_curvature_operator",
    "GeodesicTrace",
    "DistanceResult",
    "integrate_geodesic",
    "exp_map",
    "local_distance",
    "ParallelFrame",
    "JacobiFieldData",
    "covariant_derivative",
    "parallel_transport",
    "jacobi_by_variation",
    "jacobi_by_ode",
    "small_time_expansion_check",
    "osculating_cross_check",
    "FlagData",
    "flag_data",
    "flag_curvature",
    "jacobi_spectrum",
    "nonpositivity_scan",
    "ClassifyConfig",
    "ClassificationReport",
    "classify_report",
    "norm_preservation_test",
    "binet_legendre_metric",
    "binet_legendre_field",
    "kappa_defect",
    "transport_invariance_of_aux",
    "holonomy_sample",
    "busemann_convexity_sample",
    "jacobi_convexity_witness",
    "FinslerError",
    "InputError",
    "DomainError",
    "DegeneracyError",
    "EvaluationError",
    "IntegrationError",
    "BVPError",
    "QuadratureError",
    "SamplingError",
    "ValidationError",
    "SpecError",
]
