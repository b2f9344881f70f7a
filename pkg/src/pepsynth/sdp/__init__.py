"""Interior-point SDP solver and dual certificates for performance estimation."""
from .duals import (
    CertificateError,
    DualCertificate,
    VerificationReport,
    dual_slack,
    extract_certificate,
    verify_certificate,
)
from .kernels import BACKEND
from .solver import SolverError, SolverOptions, free_gram_indices, solve, solve_value

__all__ = [
    "BACKEND",
    "CertificateError",
    "DualCertificate",
    "SolverError",
    "SolverOptions",
    "VerificationReport",
    "dual_slack",
    "extract_certificate",
    "free_gram_indices",
    "solve",
    "solve_value",
    "verify_certificate",
]
