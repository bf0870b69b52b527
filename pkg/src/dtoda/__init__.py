"""dtoda: plane-domain geometry as a dispersionless 2D Toda tau-function.

Radial background densities on an annulus, exterior conformal maps,
harmonic and dual moments, the tau-function by three routes, the inverse
moment problem, Laplacian growth, and a numerical identity harness.
"""

from . import backend
from .conformal import (BoundaryCurve, ExteriorMap, boundary_curve, green,
                        invert_batch, invert_point, map_from_json_dict,
                        univalence_check, univalence_report, winding_number)
from .density import (Annulus, BackgroundDensity, cylinder,
                      density_from_json_dict, eval_potential, eval_sigma,
                      general_family, homogeneous, tabulated_radial,
                      u0_constant)
from .growth import (GrowthState, Trajectory, grow_front_tracking,
                     grow_moment_driven, initial_state, map_to_cone,
                     map_to_cylinder)
from .identities import (IdentityReport, check_dkdv, check_gradient,
                         check_green_from_tau, check_hirota,
                         check_homogeneity, check_parameter_derivative,
                         check_third_derivative, check_w_from_tau, run_suite)
from .inverse import (InverseProblem, InverseSolution, cold_start_map,
                      solve_domain)
from .moments import (DualMoments, MomentVector, cauchy_transform,
                      dual_moments, forward_moments, moments_from_json_dict,
                      potential_field)
from .tau import (DerivativeStencil, T0LineProfile, TauLattice, TauSample,
                  t0_line_profile, tau_derivative, tau_double_integral,
                  tau_t0_closed, tau_via_moments, tau_via_moments_auto)

__version__ = "0.1.0"

__all__ = [
    "Annulus", "BackgroundDensity", "BoundaryCurve", "DerivativeStencil",
    "DualMoments", "ExteriorMap", "GrowthState", "IdentityReport",
    "InverseProblem", "InverseSolution", "MomentVector", "T0LineProfile",
    "TauLattice", "TauSample", "Trajectory", "backend", "boundary_curve",
    "cauchy_transform", "check_dkdv", "check_gradient",
    "check_green_from_tau", "check_hirota", "check_homogeneity",
    "check_parameter_derivative", "check_third_derivative",
    "check_w_from_tau", "cold_start_map", "cylinder",
    "density_from_json_dict", "dual_moments", "eval_potential", "eval_sigma",
    "forward_moments", "general_family", "green", "grow_front_tracking",
    "grow_moment_driven", "homogeneous", "initial_state", "invert_batch",
    "invert_point", "map_from_json_dict", "map_to_cone", "map_to_cylinder",
    "moments_from_json_dict", "potential_field", "run_suite", "solve_domain",
    "t0_line_profile", "tabulated_radial", "tau_derivative",
    "tau_double_integral", "tau_t0_closed", "tau_via_moments",
    "tau_via_moments_auto", "u0_constant", "univalence_check",
    "univalence_report", "winding_number", "__version__",
]
