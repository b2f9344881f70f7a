"""Semidefinite performance-estimation problems.

Every problem here reads

    maximize    c^T F
    subject to  Tr(A_k G) + a_k^T F + b_k  (<= | ==)  0,    G PSD,

with ``G`` a Gram matrix and ``F`` a vector of function values.  Three
builders are provided: the greedy method (GFOM) problem, the problem for a
fixed-step method in canonical form, and the problem obtained after
aggregating the GFOM optimality conditions with step coefficients.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .basis import STAR, BasisIndex, matrix_block, sym, sym_terms, terms_diff
from .classes import (
    EQ,
    LE,
    AffineConstraint,
    ClassSpec,
    Triplet,
    TripletSet,
    check_interpolable,
    class_from_dict,
    interpolation_constraints,
)

OPTIMAL = "optimal"
MAX_ITERATIONS = "max-iterations"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass
class SdpProblem:
    N: int
    objective: np.ndarray
    constraints: List[AffineConstraint]
    psd_side: int
    # maps the reduced Gram matrix back: G_full = basis_map^T G basis_map
    basis_map: Optional[np.ndarray] = None
    kind: str = "gfom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (self.N + 2,):
            raise ValueError("objective must have length N+2")
        seen = set()
        for c in self.constraints:
            if c.tag in seen:
                raise ValueError(f"duplicate constraint tag {c.tag!r}")
            seen.add(c.tag)
            if c.A.shape != (self.psd_side, self.psd_side) or c.a.shape != (self.N + 2,):
                raise ValueError(f"constraint {c.tag} has wrong dimensions")
        self._labels = {c.tag: k for k, c in enumerate(self.constraints)}

    @property
    def label_map(self) -> Dict[str, int]:
        return dict(self._labels)

    def constraint(self, tag: str) -> AffineConstraint:
        return self.constraints[self._labels[tag]]

    def full_gram(self, G: np.ndarray) -> np.ndarray:
        if self.basis_map is None:
            return G
        T = self.basis_map
        return T.T @ G @ T

    def permuted(self, order) -> "SdpProblem":
        return SdpProblem(
            self.N, self.objective, [self.constraints[k] for k in order],
            self.psd_side, self.basis_map, self.kind, dict(self.params),
        )

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        tril = np.tril_indices(self.psd_side)
        out = {
            "kind": self.kind,
            "N": self.N,
            "psd_side": self.psd_side,
            "params": self.params,
            "objective": self.objective.tolist(),
            "constraints": [
                {
                    "tag": c.tag,
                    "sense": c.sense,
                    "A_lower": c.A[tril].tolist(),
                    "a": c.a.tolist(),
                    "b": c.b,
                }
                for c in self.constraints
            ],
        }
        if self.basis_map is not None:
            out["basis_map"] = self.basis_map.tolist()
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SdpProblem":
        n = int(d["psd_side"])
        tril = np.tril_indices(n)
        cons = []
        for c in d["constraints"]:
            A = np.zeros((n, n))
            A[tril] = c["A_lower"]
            A = A + np.tril(A, -1).T
            cons.append(AffineConstraint(A, np.array(c["a"], float), float(c["b"]), c["sense"], c["tag"]))
        T = d.get("basis_map")
        return cls(
            int(d["N"]), np.array(d["objective"], float), cons, n,
            None if T is None else np.array(T, float), d.get("kind", "gfom"), d.get("params", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "SdpProblem":
        return cls.from_dict(json.loads(text))


@dataclass
class SdpSolution:
    G: np.ndarray
    F: np.ndarray
    dual: Dict[str, float]
    primal_objective: float
    dual_objective: float
    status: str
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return self.primal_objective

    def to_dict(self) -> dict:
        diag = {k: v for k, v in self.diagnostics.items()
                if isinstance(v, (int, float, str)) and not isinstance(v, bool)}
        return {
            "status": self.status, "value": float(self.primal_objective),
            "dual_objective": float(self.dual_objective), "iterations": int(self.iterations),
            "G": np.asarray(self.G).tolist(), "F": np.asarray(self.F).tolist(),
            "dual": {k: float(v) for k, v in self.dual.items()}, "diagnostics": diag,
        }


def _objective(N: int) -> np.ndarray:
    basis = BasisIndex(N)
    return basis.f(N) - basis.f(STAR)


def _init_constraint(basis: BasisIndex, R: float) -> AffineConstraint:
    d = basis.x(0) - basis.x(STAR)
    return AffineConstraint(sym(d, d), np.zeros(basis.value_len), -float(R) ** 2, LE, "init")


def _check_radius(R: float) -> None:
    if not (np.isfinite(R) and R >= 0):
        raise ValueError(f"initial distance must be finite and >= 0, got {R}")


def build_gfom_pep(cls: ClassSpec, N: int, R: float = 1.0) -> SdpProblem:
    _check_radius(R)
    basis = BasisIndex(N)
    cons = list(interpolation_constraints(cls, N))
    zero = np.zeros(basis.value_len)
    block = iter(matrix_block(N * (N + 1), basis.gram_side))
    for i in range(1, N + 1):
        for j in range(i):
            A = sym_terms(basis.g_terms(i), basis.g_terms(j), next(block))
            cons.append(AffineConstraint.symmetric(A, zero, 0.0, EQ, f"orth:{i}:{j}"))
    for i in range(1, N + 1):
        for j in range(1, i + 1):
            A = sym_terms(basis.g_terms(i), terms_diff(basis.x_terms(j), basis.x_terms(0)), next(block))
            cons.append(AffineConstraint.symmetric(A, zero, 0.0, EQ, f"span:{i}:{j}"))
    cons.append(_init_constraint(basis, R))
    return SdpProblem(N, _objective(N), cons, basis.gram_side, None, "gfom",
                      {"R": float(R), **cls.to_dict()})


def _as_h(h, N: int) -> np.ndarray:
    h = np.asarray(getattr(h, "h", h), dtype=float)
    if h.shape != (N + 1, N + 1):
        raise ValueError(f"step array has shape {h.shape}, expected {(N + 1, N + 1)}")
    if np.any(np.triu(h) != 0):
        raise ValueError("step array must be strictly lower triangular")
    return h


def fixed_step_basis_map(h: np.ndarray) -> np.ndarray:
    """Matrix ``T`` with ``P_full = P_reduced T`` once ``x_i = x_0 - sum h_ij g_j``."""
    N = h.shape[0] - 1
    T = np.zeros((N + 2, 2 * N + 2))
    for j in range(N + 1):
        T[j, j] = 1.0
    for i in range(1, N + 1):
        T[: N + 1, N + i] = -h[i]
    T[N + 1, 2 * N + 1] = 1.0
    return T


def build_fixed_step_pep(cls: ClassSpec, N: int, R: float, h) -> SdpProblem:
    """Worst case of ``x_i = x_0 - sum_{j<i} h_ij g_j`` after ``N`` steps.

    The points ``x_1..x_N`` are eliminated, so the Gram matrix has side
    ``N+2`` over ``(g_0, ..., g_N, x_* - x_0)``.
    """
    _check_radius(R)
    h = _as_h(h, N)
    basis = BasisIndex(N)
    T = fixed_step_basis_map(h)
    full = list(interpolation_constraints(cls, N)) + [_init_constraint(basis, R)]
    cons = []
    for c in full:
        A = T @ c.A @ T.T
        A = 0.5 * (A + A.T)
        cons.append(AffineConstraint(A, c.a, c.b, c.sense, c.tag))
    return SdpProblem(N, _objective(N), cons, N + 2, T, "fixed-step",
                      {"R": float(R), **cls.to_dict()})


def build_ssep_pep(cls: ClassSpec, N: int, R: float, steps) -> SdpProblem:
    """GFOM problem with its optimality conditions replaced by one
    aggregated equality per iteration, weighted by ``steps.beta`` and
    ``steps.gamma``."""
    _check_radius(R)
    if steps.N != N:
        raise ValueError(f"steps built for N={steps.N}, problem has N={N}")
    basis = BasisIndex(N)
    cons = list(interpolation_constraints(cls, N))
    zero = np.zeros(basis.value_len)
    for i in range(1, N + 1):
        v = np.zeros(basis.gram_side)
        for j in range(i):
            v += steps.beta[i, j] * basis.g(j)
        for j in range(1, i + 1):
            v += steps.gamma[i, j] * (basis.x(j) - basis.x(0))
        cons.append(AffineConstraint(sym(basis.g(i), v), zero, 0.0, EQ, f"agg:{i}"))
    cons.append(_init_constraint(basis, R))
    return SdpProblem(N, _objective(N), cons, basis.gram_side, None, "ssep",
                      {"R": float(R), **cls.to_dict()})


# ---------------------------------------------------------------------------
# Gram matrices <-> triplets


def gram_from_triplets(S: TripletSet):
    """Return ``(G, F)`` for a complete triplet set, in the standard layout."""
    if not S.is_complete():
        raise ValueError("triplet set must cover every index of I*_N")
    N = S.N
    x0 = S[0].x
    cols = [S[i].g for i in range(N + 1)]
    cols += [S[i].x - x0 for i in range(1, N + 1)]
    cols.append(S[STAR].x - x0)
    P = np.column_stack(cols)
    F = np.array([S[i].f for i in range(N + 1)] + [S[STAR].f])
    return P.T @ P, F


def reconstruct_worst_case(problem: SdpProblem, sol: SdpSolution, psd_tol: float = 1e-7) -> TripletSet:
    """Factor an optimal Gram matrix into explicit points and subgradients."""
    if sol.status != OPTIMAL:
        raise ValueError(f"cannot reconstruct from a solution with status {sol.status!r}")
    G = problem.full_gram(np.asarray(sol.G, dtype=float))
    G = 0.5 * (G + G.T)
    w, V = np.linalg.eigh(G)
    top = max(float(w.max()), 0.0)
    if w.min() < -psd_tol * max(1.0, top):
        raise ValueError(f"Gram matrix is not PSD (min eigenvalue {w.min():.3e})")
    keep = w > 1e-8 * top if top > 0 else np.zeros_like(w, dtype=bool)
    if not keep.any():
        P = np.zeros((1, G.shape[0]))
    else:
        P = (V[:, keep] * np.sqrt(w[keep])).T
    N = problem.N
    d = P.shape[0]
    F = np.asarray(sol.F, dtype=float)
    x0 = np.zeros(d)
    entries = {0: Triplet(x0, P[:, 0], F[0])}
    for i in range(1, N + 1):
        entries[i] = Triplet(x0 + P[:, N + i], P[:, i], F[i])
    entries[STAR] = Triplet(x0 + P[:, 2 * N + 1], np.zeros(d), F[N + 1])
    return TripletSet(N, entries)


def problem_class(problem: SdpProblem) -> ClassSpec:
    return class_from_dict(problem.params)


def worst_case_report(problem: SdpProblem, sol: SdpSolution, tol: float = 1e-7) -> dict:
    S = reconstruct_worst_case(problem, sol)
    rep = check_interpolable(problem_class(problem), S, tol)
    gap = S[problem.N].f - S[STAR].f
    return {"triplets": S, "interpolable": rep.interpolable, "violations": rep.violations,
            "objective": gap}
