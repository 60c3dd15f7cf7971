"""Critical fronts of the extended Fisher-KPP equation and their stability."""
from .dispersion import SpreadingData, essential_borders, roots_near_origin, spreading
from .eigen_scan import classify_spectrum, rayleigh_bound_check, unstable_region
from .errors import (
    DoubleRootMerged,
    EFKPPError,
    LSFailure,
    NoConvergence,
    ParameterError,
    SolverFailure,
)
from .evans import EvansEnv, control_crossing, evans_eval, no_resonance_certificate, scan_small_eigenvalues
from .front_solver import FrontSolution, front, linearization, newton_continue, solve_kpp_front
from .operators import FieldSample, Grid, assemble, cokernel, precondition, project
from .pde_sim import measure_decay, run_front_selection
from .reaction import ReactionTerm, logistic, polynomial, sine, validate

__all__ = [
    "DoubleRootMerged", "EFKPPError", "EvansEnv", "FieldSample", "FrontSolution", "Grid",
    "LSFailure", "NoConvergence", "ParameterError", "ReactionTerm", "SolverFailure",
    "SpreadingData", "assemble", "classify_spectrum", "cokernel", "control_crossing",
    "essential_borders", "evans_eval", "front", "linearization", "logistic",
    "measure_decay", "newton_continue", "no_resonance_certificate", "polynomial",
    "precondition", "project", "rayleigh_bound_check", "roots_near_origin",
    "run_front_selection", "scan_small_eigenvalues", "sine", "solve_kpp_front",
    "spreading", "unstable_region", "validate",
]
