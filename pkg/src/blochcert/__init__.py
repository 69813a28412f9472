"""Fixed-point certificates and lower bounds for Bloch-type constants."""

__version__ = "0.1.0"

from .series import Poly, cauchy_derivative_bound, derivative, eval_poly, max_modulus_circle, taylor_shift
from .contraction import (
    CertificateKind,
    CertificationResult,
    banach_solve,
    build_gw,
    certify_origin,
    certify_schlicht,
    optimize_origin,
    quartic,
    search_center,
    verify_schlicht_disk,
)
from .bounds import (
    a3_cap,
    beta_lower_E,
    bloch_bound_v1,
    bloch_bound_v2,
    eh_bound,
    eh_penalty,
    optimize_2d,
    product_radius,
    wu_bound,
    wu_branch_bounds,
)
from .wu import (
    PolyMap,
    banach_solve_mv,
    certify_schlicht_mv,
    check_small_eigen,
    estimate_wu_K,
    eval_map,
    jacobian_stats,
    theorem_bound_mv,
)
