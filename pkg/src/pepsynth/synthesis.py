"""From dual certificates to fixed-step methods.

The multipliers of the orthogonality and span rows define a fixed-step
method through

    x_i = x_0 - sum_{j<i} (gamma_ij / gamma_ii)(x_j - x_0)
              - sum_{j<i} (beta_ij / gamma_ii) g_j,

which is reduced to the canonical form ``x_i = x_0 - sum_{j<i} h_ij g_j``
and optionally factored into a two-momentum recursion with parameters
``zeta_i`` and ``eta_i``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .sdp.duals import DualCertificate


class DegenerateStepError(ValueError):
    pass


def _lower_dict(A: np.ndarray, first_row: int, diag: bool) -> dict:
    N = A.shape[0] - 1
    out = {}
    for i in range(first_row, N + 1):
        for j in range(i + 1 if diag else i):
            out[f"{i}:{j}"] = float(A[i, j])
    return out


def _from_dict(N: int, d: dict) -> np.ndarray:
    A = np.zeros((N + 1, N + 1))
    for k, v in d.items():
        i, j = (int(t) for t in k.split(":"))
        A[i, j] = float(v)
    return A


@dataclass(frozen=True)
class StepCoefficients:
    """``beta[i, j]`` for ``0 <= j < i`` and ``gamma[i, j]`` for ``1 <= j <= i``."""

    N: int
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        shape = (self.N + 1, self.N + 1)
        if self.beta.shape != shape or self.gamma.shape != shape:
            raise ValueError(f"step arrays must have shape {shape}")

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "beta": _lower_dict(self.beta, 1, diag=False),
            "gamma": {k: v for k, v in _lower_dict(self.gamma, 1, diag=True).items()
                      if not k.endswith(":0")},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "StepCoefficients":
        N = int(d["N"])
        return cls(N, _from_dict(N, d["beta"]), _from_dict(N, d["gamma"]))

    @classmethod
    def from_json(cls, text: str) -> "StepCoefficients":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class CanonicalForm:
    """``h[i, j]`` for ``1 <= i <= N``, ``0 <= j < i``; row 0 is zero."""

    N: int
    h: np.ndarray

    def __post_init__(self):
        if self.h.shape != (self.N + 1, self.N + 1):
            raise ValueError(f"h must have shape {(self.N + 1, self.N + 1)}")
        if np.any(np.triu(self.h) != 0):
            raise ValueError("h must be strictly lower triangular")

    def to_dict(self) -> dict:
        return {"N": self.N, "h": [[float(v) for v in self.h[i, :i]] for i in range(1, self.N + 1)]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "CanonicalForm":
        N = int(d["N"])
        h = np.zeros((N + 1, N + 1))
        for i, row in enumerate(d["h"], start=1):
            h[i, : len(row)] = row
        return cls(N, h)

    @classmethod
    def from_json(cls, text: str) -> "CanonicalForm":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FactoredForm:
    """Two-momentum parameters, index ``k`` holding step ``k+1``."""

    N: int
    zeta: np.ndarray
    eta: np.ndarray
    residual: float = float("nan")
    L: float = 1.0

    def to_dict(self) -> dict:
        return {"N": self.N, "L": self.L, "zeta": self.zeta.tolist(), "eta": self.eta.tolist(),
                "residual": self.residual}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "FactoredForm":
        return cls(int(d["N"]), np.array(d["zeta"], float), np.array(d["eta"], float),
                   float(d.get("residual", float("nan"))), float(d.get("L", 1.0)))

    @classmethod
    def from_json(cls, text: str) -> "FactoredForm":
        return cls.from_dict(json.loads(text))

    def to_csv(self, label: str = "") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kappa", "i", "zeta", "eta"])
        for i in range(self.N):
            w.writerow([label, i + 1, f"{self.zeta[i]:.6g}", f"{self.eta[i]:.6g}"])
        return buf.getvalue()


def synthesize_steps(cert: DualCertificate, rtol: float = 1e-10) -> StepCoefficients:
    """Copy the orthogonality and span multipliers of ``cert`` into step form."""
    N = cert.N
    beta, gamma = cert.beta_array(), cert.gamma_array()
    for i in range(1, N + 1):
        scale = max(1.0, np.abs(beta[i, :i]).max(initial=0.0), np.abs(gamma[i, 1: i + 1]).max(initial=0.0))
        if abs(gamma[i, i]) <= rtol * scale:
            raise DegenerateStepError(
                f"gamma[{i},{i}] = {gamma[i, i]:.3e} vanishes; the certificate does not define step {i}"
            )
    return StepCoefficients(N, beta, gamma)


def to_canonical(steps: StepCoefficients) -> CanonicalForm:
    """Eliminate ``x_j`` recursively; carried out in exact rational arithmetic."""
    N = steps.N
    H = [[Fraction(0)] * (N + 1) for _ in range(N + 1)]
    for i in range(1, N + 1):
        gii = Fraction(float(steps.gamma[i, i]))
        if gii == 0:
            raise DegenerateStepError(f"gamma[{i},{i}] is zero")
        row = [Fraction(0)] * (N + 1)
        for j in range(i):
            row[j] += Fraction(float(steps.beta[i, j])) / gii
        for j in range(1, i):
            c = Fraction(float(steps.gamma[i, j])) / gii
            if c:
                for k in range(j):
                    row[k] -= c * H[j][k]
        H[i] = row
    h = np.array([[float(v) for v in r] for r in H])
    return CanonicalForm(N, h)


def factorize(form: CanonicalForm, L: float = 1.0, guard: float = 1e-8) -> FactoredForm:
    """Read ``zeta``/``eta`` off the two sub-diagonals of ``h`` and record the
    mismatch of the regenerated ``h'``."""
    if form.N < 1:
        raise ValueError("factorization needs N >= 1")
    h, N = form.h, form.N
    zeta, eta = np.zeros(N), np.zeros(N)
    eta[0] = L * h[1, 0] - 1.0
    for i in range(2, N + 1):
        den = h[i - 1, i - 2] - 1.0 / L
        if abs(den) <= guard * max(1.0, abs(h[i - 1, i - 2])):
            raise DegenerateStepError(f"step {i}: h[{i - 1},{i - 2}] equals 1/L, momentum not identifiable")
        zeta[i - 1] = (h[i, i - 2] - h[i - 1, i - 2]) / den
        eta[i - 1] = L * h[i, i - 1] - 1.0 - zeta[i - 1]
    draft = FactoredForm(N, zeta, eta, L=L)
    residual = float(np.abs(expand(draft, L).h - h).max())
    return FactoredForm(N, zeta, eta, residual, L)


def expand(form: FactoredForm, L: float | None = None) -> CanonicalForm:
    """Canonical ``h'`` generated by the two-momentum recursion."""
    L = form.L if L is None else L
    N = form.N
    h = np.zeros((N + 1, N + 1))
    for i in range(1, N + 1):
        z, e = form.zeta[i - 1], form.eta[i - 1]
        h[i, i - 1] = (1.0 + z + e) / L
        if i >= 2:
            h[i, i - 2] = h[i - 1, i - 2] * (1.0 + z) - z / L
        for j in range(i - 2):
            prev2 = h[i - 2, j] if i >= 2 else 0.0
            h[i, j] = h[i - 1, j] + z * (h[i - 1, j] - prev2)
    return CanonicalForm(N, h)
