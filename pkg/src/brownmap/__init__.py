"""Numerical Brown measure of deformed operator-valued circular elements."""

from .constructions import (CATALOG, MomentSolution, construct_even,
                            construct_odd, f_axis_derivatives, f_eval,
                            make_example)
from .density import (DensityGrid, density_grid, laplacian_check,
                      log_potential, sigma_at, support_radius)
from .dyson import SolverOptions, eta_continuation, solve_dyson, solve_kappa
from .errors import ConvergenceError, NumericalError
from .geometry import (SingularPoint, classify_singularity,
                       find_singular_points, symmetric_classify,
                       trace_boundary)
from .model import (AtomicProfile, AtomMeasure, ModelError, load_model,
                    profile_from_measure)
from .rmt import compare, sample_spectrum
from .spectral import beta_eval, beta_values, edge_sigma, solve_edge_cubic

__all__ = [
    "CATALOG", "MomentSolution", "construct_even", "construct_odd",
    "f_axis_derivatives", "f_eval", "make_example",
    "DensityGrid", "density_grid", "laplacian_check", "log_potential",
    "sigma_at", "support_radius",
    "SolverOptions", "eta_continuation", "solve_dyson", "solve_kappa",
    "ConvergenceError", "NumericalError",
    "SingularPoint", "classify_singularity", "find_singular_points",
    "symmetric_classify", "trace_boundary",
    "AtomicProfile", "AtomMeasure", "ModelError", "load_model",
    "profile_from_measure",
    "compare", "sample_spectrum",
    "beta_eval", "beta_values", "edge_sigma", "solve_edge_cubic",
]
