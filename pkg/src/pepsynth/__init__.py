"""Performance estimation and synthesis of fixed-step first-order methods."""
from .certificates import nonsmooth_certificate, smooth_certificate, theta_sequence
from .classes import BoundedSubgradient, SmoothStronglyConvex, check_interpolable, contract_project
from .pep import build_fixed_step_pep, build_gfom_pep, build_ssep_pep, reconstruct_worst_case
from .sdp import SolverOptions, extract_certificate, solve, verify_certificate
from .synthesis import expand, factorize, synthesize_steps, to_canonical

__version__ = "0.1.0"

__all__ = [
    "BoundedSubgradient",
    "SmoothStronglyConvex",
    "SolverOptions",
    "build_fixed_step_pep",
    "build_gfom_pep",
    "build_ssep_pep",
    "check_interpolable",
    "contract_project",
    "expand",
    "extract_certificate",
    "factorize",
    "nonsmooth_certificate",
    "reconstruct_worst_case",
    "smooth_certificate",
    "solve",
    "synthesize_steps",
    "theta_sequence",
    "to_canonical",
    "verify_certificate",
]
