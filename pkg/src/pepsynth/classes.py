"""Function classes, their interpolation conditions and triplet sets.

Two classes are supported:

* :class:`SmoothStronglyConvex` -- ``L``-smooth, ``mu``-strongly convex
  functions, ``0 <= mu < L < inf``;
* :class:`BoundedSubgradient` -- convex functions whose subgradients are
  bounded in norm by ``M``.

Interpolation conditions are emitted as :class:`AffineConstraint` objects
acting on a Gram matrix ``G`` and a value vector ``F`` (see
:mod:`pepsynth.basis` for the layout).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Union

import numpy as np

from .basis import (
    STAR,
    BasisIndex,
    Index,
    index_label,
    matrix_block,
    parse_index,
    sym_terms,
    terms_diff,
)

LE = "<="
EQ = "=="


@dataclass(frozen=True)
class SmoothStronglyConvex:
    mu: float
    L: float

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be finite and positive, got {self.L}")
        if not (0 <= self.mu < self.L):
            raise ValueError(f"need 0 <= mu < L, got mu={self.mu}, L={self.L}")

    @property
    def name(self) -> str:
        return "smooth"

    def to_dict(self) -> dict:
        return {"class": "smooth", "mu": self.mu, "L": self.L}


@dataclass(frozen=True)
class BoundedSubgradient:
    M: float

    def __post_init__(self):
        if not (np.isfinite(self.M) and self.M > 0):
            raise ValueError(f"M must be finite and positive, got {self.M}")

    @property
    def name(self) -> str:
        return "nonsmooth"

    def to_dict(self) -> dict:
        return {"class": "nonsmooth", "M": self.M}


ClassSpec = Union[SmoothStronglyConvex, BoundedSubgradient]


def class_from_dict(d: dict) -> ClassSpec:
    kind = d.get("class")
    if kind == "smooth":
        return SmoothStronglyConvex(float(d.get("mu", 0.0)), float(d["L"]))
    if kind == "nonsmooth":
        return BoundedSubgradient(float(d["M"]))
    raise ValueError(f"unknown function class {kind!r}")


@dataclass(frozen=True)
class AffineConstraint:
    """``Tr(A G) + a^T F + b  (<= | ==)  0``."""

    A: np.ndarray
    a: np.ndarray
    b: float
    sense: str
    tag: str

    def __post_init__(self):
        if self.sense not in (LE, EQ):
            raise ValueError(f"bad sense {self.sense!r}")
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise ValueError("A must be square")
        if not np.array_equal(self.A, self.A.T):
            raise ValueError(f"constraint {self.tag} has a non-symmetric matrix")

    @classmethod
    def symmetric(cls, A, a, b, sense, tag) -> "AffineConstraint":
        """Constructor for matrices symmetric by construction (skips the O(n^2) check)."""
        if sense not in (LE, EQ):
            raise ValueError(f"bad sense {sense!r}")
        obj = object.__new__(cls)
        for name, value in zip(("A", "a", "b", "sense", "tag"), (A, a, b, sense, tag)):
            object.__setattr__(obj, name, value)
        return obj

    def evaluate(self, G: np.ndarray, F: np.ndarray) -> float:
        return float(np.sum(self.A * G) + self.a @ F + self.b)


def ic_tag(i: Index, j: Index) -> str:
    return f"ic:{index_label(i)}:{index_label(j)}"


def gb_tag(i: Index) -> str:
    return f"gb:{index_label(i)}"


def _smooth_pair_matrix(basis: BasisIndex, cls: SmoothStronglyConvex, i, j, out=None) -> np.ndarray:
    mu, L = cls.mu, cls.L
    dx = terms_diff(basis.x_terms(i), basis.x_terms(j))
    dg = terms_diff(basis.g_terms(i), basis.g_terms(j))
    scale = 1.0 / (2.0 * (1.0 - mu / L))
    A = np.zeros((basis.gram_side,) * 2) if out is None else out
    sym_terms(basis.g_terms(j), dx, A)
    sym_terms(dg, dg, A, scale / L)
    sym_terms(dx, dx, A, scale * mu)
    sym_terms(dx, dg, A, -2.0 * scale * mu / L)
    return A


def interpolation_constraints(cls: ClassSpec, N: int) -> List[AffineConstraint]:
    """Interpolation conditions of ``cls`` over ``I*_N`` as ``<=`` constraints.

    Diagonal pairs are omitted (they read ``0 <= 0``).  For bounded
    subgradients the gradient-bound rows come first and encode
    ``||g_i||^2 - M^2 <= 0``.
    """
    if not isinstance(cls, (BoundedSubgradient, SmoothStronglyConvex)):
        raise TypeError(f"unsupported class {cls!r}")
    basis = BasisIndex(N)
    n, idx = basis.gram_side, basis.indices()
    pairs = list(basis.pairs())
    nonsmooth = isinstance(cls, BoundedSubgradient)
    block = matrix_block(len(pairs) + (len(idx) if nonsmooth else 0), n)
    out: List[AffineConstraint] = []
    if nonsmooth:
        for i in idx:
            gi = basis.g_terms(i)
            A = sym_terms(gi, gi, block[len(out)])
            out.append(AffineConstraint.symmetric(A, np.zeros(N + 2), -cls.M**2, LE, gb_tag(i)))
    for i, j in pairs:
        A = block[len(out)]
        if nonsmooth:
            sym_terms(basis.g_terms(j), terms_diff(basis.x_terms(i), basis.x_terms(j)), A)
        else:
            _smooth_pair_matrix(basis, cls, i, j, A)
        out.append(AffineConstraint.symmetric(A, basis.f(j) - basis.f(i), 0.0, LE, ic_tag(i, j)))
    return out


# ---------------------------------------------------------------------------
# triplet sets


@dataclass(frozen=True)
class Triplet:
    x: np.ndarray
    g: np.ndarray
    f: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(-1))
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float).reshape(-1))
        object.__setattr__(self, "f", float(self.f))
        if self.x.shape != self.g.shape:
            raise ValueError("x and g must share one dimension")


@dataclass(frozen=True)
class TripletSet:
    """Triplets ``(x_i, g_i, f_i)`` indexed by a subset of ``I*_N``."""

    N: int
    entries: Dict[Index, Triplet] = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be >= 0")
        norm = {}
        for k, t in self.entries.items():
            k = parse_index(k)
            if k != STAR and not 0 <= k <= self.N:
                raise ValueError(f"index {k} outside I*_{self.N}")
            norm[k] = t
        dims = {t.x.shape[0] for t in norm.values()}
        if len(dims) > 1:
            raise ValueError(f"triplets have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "entries", norm)

    @property
    def d(self) -> int:
        for t in self.entries.values():
            return t.x.shape[0]
        return 0

    def __getitem__(self, i: Index) -> Triplet:
        return self.entries[parse_index(i)]

    def __contains__(self, i) -> bool:
        return parse_index(i) in self.entries

    def keys(self) -> list:
        order = [STAR] + list(range(self.N + 1))
        return [k for k in order if k in self.entries]

    def is_complete(self) -> bool:
        return len(self.entries) == self.N + 2

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "d": self.d,
            "entries": {
                index_label(k): {"x": t.x.tolist(), "g": t.g.tolist(), "f": t.f}
                for k, t in ((k, self.entries[k]) for k in self.keys())
            },
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "TripletSet":
        entries = {
            parse_index(k): Triplet(np.array(v["x"], float), np.array(v["g"], float), v["f"])
            for k, v in d["entries"].items()
        }
        s = cls(int(d["N"]), entries)
        if "d" in d and entries and s.d != int(d["d"]):
            raise ValueError(f"declared d={d['d']} but vectors have dimension {s.d}")
        return s

    @classmethod
    def from_json(cls, text: str) -> "TripletSet":
        return cls.from_dict(json.loads(text))


@dataclass
class InterpolabilityReport:
    interpolable: bool
    residuals: Dict[str, float]
    violations: List[tuple]

    def __bool__(self) -> bool:
        return self.interpolable


def _scale(*ts: Triplet) -> float:
    vals = [1.0]
    for t in ts:
        vals += [abs(t.f), float(t.g @ t.g), float(t.x @ t.x)]
    return max(vals)


def check_interpolable(cls: ClassSpec, S: TripletSet, tol: float = 1e-9) -> InterpolabilityReport:
    """Check the interpolation conditions of ``cls`` on ``S``.

    Residuals are the left-hand sides of the ``<= 0`` inequalities (same
    convention as :func:`interpolation_constraints`).  A residual counts as
    a violation when it exceeds ``tol`` times the magnitude scale of the
    triplets involved.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    residuals: Dict[str, float] = {}
    violations = []
    keys = S.keys()

    def record(tag, r, scale):
        residuals[tag] = r
        if r > tol * scale:
            violations.append((tag, r))

    if isinstance(cls, BoundedSubgradient):
        for i in keys:
            t = S.entries[i]
            record(gb_tag(i), float(t.g @ t.g) - cls.M**2, _scale(t))
        for i in keys:
            for j in keys:
                if i == j:
                    continue
                ti, tj = S.entries[i], S.entries[j]
                r = tj.f - ti.f + float(tj.g @ (ti.x - tj.x))
                record(ic_tag(i, j), r, _scale(ti, tj))
    elif isinstance(cls, SmoothStronglyConvex):
        mu, L = cls.mu, cls.L
        c = 1.0 / (2.0 * (1.0 - mu / L))
        for i in keys:
            for j in keys:
                if i == j:
                    continue
                ti, tj = S.entries[i], S.entries[j]
                dx, dg = ti.x - tj.x, ti.g - tj.g
                r = tj.f - ti.f + float(tj.g @ dx) + c * (
                    float(dg @ dg) / L + mu * float(dx @ dx) - 2.0 * mu / L * float(dx @ dg)
                )
                record(ic_tag(i, j), r, _scale(ti, tj))
    else:
        raise TypeError(f"unsupported class {cls!r}")
    return InterpolabilityReport(not violations, residuals, violations)


# ---------------------------------------------------------------------------
# projection onto gradient spans


def projection_precondition_residual(S: TripletSet) -> float:
    """Largest relative violation of the orthogonality conditions

    ``<g_i, g_j> = 0`` (j < i) and ``<g_i, x_j - x_0> = 0`` (1 <= j <= i).
    """
    worst = 0.0
    x0 = S[0].x
    for i in range(1, S.N + 1):
        gi = S[i].g
        ni = np.linalg.norm(gi)
        for j in range(i):
            gj = S[j].g
            worst = max(worst, abs(gi @ gj) / max(1.0, ni * np.linalg.norm(gj)))
        for j in range(1, i + 1):
            dx = S[j].x - x0
            worst = max(worst, abs(gi @ dx) / max(1.0, ni * np.linalg.norm(dx)))
    return float(worst)


def contract_project(S: TripletSet, tol: float = 1e-8) -> TripletSet:
    """Move every point onto ``x_0 + span{g_0, ..., g_{i-1}}``.

    Each ``x_i - x_0`` is split into its component in the span of the
    earlier gradients and a remainder ``v_i``; the remainder is dropped.
    ``x_* - x_0`` loses its component in ``span{v_0, ..., v_N}``.  Pairwise
    distances can only shrink and inner products with gradients are kept,
    so for contraction-preserving classes interpolability survives.
    """
    if not S.is_complete():
        raise ValueError("contract_project needs every index of I*_N")
    bad = projection_precondition_residual(S)
    if bad > tol:
        raise ValueError(f"orthogonality precondition violated (residual {bad:.3e} > {tol:.1e})")

    x0 = S[0].x
    grads = [S[j].g for j in range(S.N + 1)]
    new_x = {0: x0.copy()}
    remainders = []
    for i in range(1, S.N + 1):
        dx = S[i].x - x0
        Gi = np.column_stack(grads[:i])
        coef = np.linalg.lstsq(Gi, dx, rcond=None)[0]
        proj = Gi @ coef
        new_x[i] = x0 + proj
        remainders.append(dx - proj)

    r_star = S[STAR].x - x0
    if remainders:
        V = np.column_stack(remainders)
        # the remainders are orthogonal to every gradient in exact
        # arithmetic; strip rounding noise before taking their span, or
        # nearly dependent columns would turn that noise into directions
        Gall = np.column_stack(grads)
        V = V - Gall @ np.linalg.lstsq(Gall, V, rcond=None)[0]
        U, sv, _ = np.linalg.svd(V, full_matrices=False)
        Q = U[:, sv > 1e-10 * max(1.0, sv.max(initial=0.0))]
        r_star = r_star - Q @ (Q.T @ r_star)
    new_x[STAR] = x0 + r_star

    entries = {k: Triplet(new_x[k], S[k].g, S[k].f) for k in S.keys()}
    return TripletSet(S.N, entries)
