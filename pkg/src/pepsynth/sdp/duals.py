"""Dual certificates of the greedy-method PEP and their independent check.

A certificate collects nonnegative multipliers ``alpha`` for the
interpolation rows, free multipliers ``beta`` (orthogonality rows) and
``gamma`` (span rows), and ``tau_x >= 0`` for the initial-distance row.  It
certifies ``f_N - f_* <= omega`` whenever the slack matrix

    sum alpha_k A_k + sum beta_ij g_i.g_j + sum gamma_ij g_i.(x_j - x_0)
        + tau_x (x_0 - x_*).(x_0 - x_*)

is PSD and the value coefficients reproduce ``f_N - f_*`` exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Dict, List, Tuple

import numpy as np

from ..classes import LE, ClassSpec, class_from_dict
from ..pep import OPTIMAL, SdpProblem, SdpSolution, problem_class


class CertificateError(ValueError):
    """Raised when a solver solution cannot be turned into a certificate."""


def _pair_key(i, j) -> str:
    return f"{i}:{j}"


def _parse_pair(key: str) -> Tuple[int, int]:
    i, j = key.split(":")
    return int(i), int(j)


@dataclass(frozen=True)
class DualCertificate:
    N: int
    cls: ClassSpec
    # interpolation multipliers keyed "i:j"; gradient-bound ones keyed "i"
    alpha: Dict[str, float]
    beta: Dict[str, float]
    gamma: Dict[str, float]
    tau_x: float
    omega: float
    R: float = 1.0
    params: dict = field(default_factory=dict)

    def multipliers(self) -> Dict[str, float]:
        """Multipliers keyed by the constraint tags of the PEP builders."""
        out = {}
        for k, v in self.alpha.items():
            out[("ic:" if ":" in k else "gb:") + k] = v
        out.update({f"orth:{k}": v for k, v in self.beta.items()})
        out.update({f"span:{k}": v for k, v in self.gamma.items()})
        out["init"] = self.tau_x
        return out

    def beta_array(self) -> np.ndarray:
        B = np.zeros((self.N + 1, self.N + 1))
        for k, v in self.beta.items():
            B[_parse_pair(k)] = v
        return B

    def gamma_array(self) -> np.ndarray:
        C = np.zeros((self.N + 1, self.N + 1))
        for k, v in self.gamma.items():
            C[_parse_pair(k)] = v
        return C

    def recomputed_omega(self) -> float:
        """``tau_x R^2 - sum_k alpha_k b_k`` over the interpolation rows."""
        total = self.tau_x * self.R**2
        M = getattr(self.cls, "M", None)
        for k, v in self.alpha.items():
            if ":" not in k:
                total += v * M**2
        return float(total)

    def to_dict(self) -> dict:
        return {
            "class": self.cls.to_dict(),
            "N": self.N,
            "R": self.R,
            "alpha": dict(self.alpha),
            "beta": dict(self.beta),
            "gamma": dict(self.gamma),
            "tau_x": self.tau_x,
            "omega": self.omega,
            "params": dict(self.params),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "DualCertificate":
        return cls(
            int(d["N"]), class_from_dict(d["class"]),
            {str(k): float(v) for k, v in d["alpha"].items()},
            {str(k): float(v) for k, v in d.get("beta", {}).items()},
            {str(k): float(v) for k, v in d.get("gamma", {}).items()},
            float(d["tau_x"]), float(d["omega"]), float(d.get("R", 1.0)), dict(d.get("params", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "DualCertificate":
        return cls.from_dict(json.loads(text))


def extract_certificate(problem: SdpProblem, sol: SdpSolution, feas_tol: float = 1e-9) -> DualCertificate:
    """Read the multipliers of a solved greedy-method PEP into a certificate.

    Interpolation multipliers in ``[-feas_tol, 0)`` are clamped to zero;
    anything more negative raises :class:`CertificateError`.
    """
    if sol.status != OPTIMAL:
        raise CertificateError(f"solution status is {sol.status!r}, not optimal")
    if problem.kind != "gfom":
        raise CertificateError("certificates are extracted from greedy-method PEPs only")
    missing = [c.tag for c in problem.constraints if c.tag not in sol.dual]
    if missing:
        raise CertificateError(f"solution lacks multipliers for {missing[:5]}")

    alpha, beta, gamma = {}, {}, {}
    tau = None
    for con in problem.constraints:
        v = float(sol.dual[con.tag])
        kind, _, key = con.tag.partition(":")
        if con.sense == LE:
            if v < -feas_tol:
                raise CertificateError(f"multiplier of {con.tag} is {v:.3e} < 0")
            v = max(v, 0.0)
        if kind in ("ic", "gb"):
            alpha[key] = v
        elif kind == "orth":
            beta[key] = v
        elif kind == "span":
            gamma[key] = v
        elif kind == "init":
            tau = v
        else:
            raise CertificateError(f"unexpected constraint tag {con.tag!r}")
    if tau is None:
        raise CertificateError("problem has no initial-distance row")
    cert = DualCertificate(problem.N, problem_class(problem), alpha, beta, gamma, tau, 0.0,
                           float(problem.params.get("R", 1.0)))
    return replace(cert, omega=cert.recomputed_omega())


@dataclass
class VerificationReport:
    psd_min_eig: float
    equality_residual: float
    sign_violations: List[Tuple[str, float]]
    omega_check: float
    missing_tags: List[str]
    slack: np.ndarray = field(repr=False)
    tol: float = 1e-9

    @property
    def feasible(self) -> bool:
        return (
            self.psd_min_eig >= -self.tol
            and self.equality_residual <= self.tol
            and not self.sign_violations
            and not self.missing_tags
        )

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "psd_min_eig": self.psd_min_eig,
            "equality_residual": self.equality_residual,
            "sign_violations": [list(v) for v in self.sign_violations],
            "omega_check": self.omega_check,
            "missing_tags": self.missing_tags,
        }


def dual_slack(problem: SdpProblem, cert: DualCertificate) -> Tuple[np.ndarray, np.ndarray]:
    """Slack matrix and value-coefficient residual of ``cert`` on ``problem``."""
    mult = cert.multipliers()
    n, nF = problem.psd_side, problem.N + 2
    S = np.zeros((n, n))
    eq = np.array(problem.objective, dtype=float)
    for con in problem.constraints:
        v = mult.get(con.tag, 0.0)
        if v:
            S += v * con.A
            eq -= v * con.a
    return 0.5 * (S + S.T), eq


def verify_certificate(problem: SdpProblem, cert: DualCertificate, tol: float = 1e-9) -> VerificationReport:
    """Check a certificate by matrix assembly and one symmetric eigensolve."""
    if cert.N != problem.N:
        raise ValueError(f"certificate has N={cert.N}, problem has N={problem.N}")
    tags = set(problem.label_map)
    mult = cert.multipliers()
    # multipliers on rows the problem does not have cannot be honoured
    missing = sorted(k for k, v in mult.items() if k not in tags and v != 0.0)
    S, eq = dual_slack(problem, cert)
    signs = [
        (con.tag, mult[con.tag]) for con in problem.constraints
        if con.sense == LE and mult.get(con.tag, 0.0) < -tol
    ]
    omega = float(-sum(mult.get(con.tag, 0.0) * con.b for con in problem.constraints))
    return VerificationReport(
        psd_min_eig=float(np.linalg.eigvalsh(S)[0]) if S.size else 0.0,
        equality_residual=float(np.abs(eq).max(initial=0.0)),
        sign_violations=signs,
        omega_check=omega,
        missing_tags=missing,
        slack=S,
        tol=tol,
    )
