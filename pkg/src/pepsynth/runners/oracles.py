"""First-order oracles and random test instances.

An oracle returns ``(f(x), g)`` with ``g`` one subgradient.  Two optional
capabilities let the runners be exact where possible:

* ``quadratic``: ``(Q, b, c)`` with ``f(x) = x^T Q x / 2 - b^T x + c``;
* ``pieces(x)``: values and gradients of every piece of a max-type function.
"""
from __future__ import annotations

import json
from typing import Optional, Tuple

import numpy as np


class Oracle:
    d: int
    quadratic: Optional[Tuple[np.ndarray, np.ndarray, float]] = None
    x_star: Optional[np.ndarray] = None
    f_star: Optional[float] = None

    def evaluate(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        raise NotImplementedError

    def value(self, x: np.ndarray) -> float:
        return self.evaluate(x)[0]

    @property
    def has_pieces(self) -> bool:
        return hasattr(self, "pieces")


class Quadratic(Oracle):
    """``f(x) = x^T Q x / 2 - b^T x + c`` with ``Q`` symmetric PSD."""

    def __init__(self, Q, b=None, c: float = 0.0):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[0] != Q.shape[1] or not np.allclose(Q, Q.T):
            raise ValueError("Q must be square and symmetric")
        self.Q = 0.5 * (Q + Q.T)
        self.d = Q.shape[0]
        self.b = np.zeros(self.d) if b is None else np.asarray(b, dtype=float).reshape(self.d)
        self.c = float(c)
        self.quadratic = (self.Q, self.b, self.c)
        xs = np.linalg.lstsq(self.Q, self.b, rcond=None)[0]
        if np.linalg.norm(self.Q @ xs - self.b) <= 1e-9 * max(1.0, np.linalg.norm(self.b)):
            self.x_star = xs
            self.f_star = self.value(xs)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        Qx = self.Q @ x
        return float(0.5 * x @ Qx - self.b @ x + self.c), Qx - self.b

    def to_dict(self) -> dict:
        return {"family": "quadratic", "Q": self.Q.tolist(), "b": self.b.tolist(), "c": self.c}


class PiecewiseMax(Oracle):
    """``f(x) = scale * max(A x + b)``, optionally with a ``||x - center|| - radius`` piece."""

    def __init__(self, A, b, scale: float = 1.0, norm_piece: Optional[Tuple[np.ndarray, float]] = None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(self.A.shape[0])
        self.d = self.A.shape[1]
        self.scale = float(scale)
        self.norm_piece = None if norm_piece is None else (np.asarray(norm_piece[0], float), float(norm_piece[1]))

    def pieces(self, x) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        vals = self.A @ x + self.b
        grads = self.A
        if self.norm_piece is not None:
            c, r = self.norm_piece
            v = x - c
            nv = np.linalg.norm(v)
            # at the center the piece is inactive whenever r > 0 and the
            # linear pieces are finite; the zero vector is a valid choice
            gn = v / nv if nv > 0 else np.zeros(self.d)
            vals = np.append(vals, nv - r)
            grads = np.vstack([grads, gn])
        return self.scale * vals, self.scale * grads

    def evaluate(self, x):
        vals, grads = self.pieces(x)
        k = int(np.argmax(vals))
        return float(vals[k]), grads[k].copy()

    def active(self, x, tol: float = 1e-9):
        vals, grads = self.pieces(x)
        top = vals.max()
        keep = vals >= top - tol * max(1.0, abs(top))
        return grads[keep]

    def to_dict(self) -> dict:
        out = {"family": "piecewise_max", "A": self.A.tolist(), "b": self.b.tolist(), "scale": self.scale}
        if self.norm_piece is not None:
            out["norm_center"] = self.norm_piece[0].tolist()
            out["norm_radius"] = self.norm_piece[1]
        return out


def quadratic(Q, b=None, c: float = 0.0) -> Quadratic:
    return Quadratic(Q, b, c)


def abs_function(M: float = 1.0) -> PiecewiseMax:
    """``M |x|`` on the real line."""
    f = PiecewiseMax([[1.0], [-1.0]], [0.0, 0.0], scale=M)
    f.x_star, f.f_star = np.zeros(1), 0.0
    return f


def nesterov_max(M: float, d: int) -> PiecewiseMax:
    """``M max(x_1, ..., x_d, ||x|| - 1)``, a hard instance for first-order methods."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    f = PiecewiseMax(np.eye(d), np.zeros(d), scale=M, norm_piece=(np.zeros(d), 1.0))
    s = 1.0 / (np.sqrt(d) + 1.0)
    f.x_star = -s * np.ones(d)
    f.f_star = -M * s
    return f


def polyhedral_max(A, b, M: float = 1.0) -> PiecewiseMax:
    return PiecewiseMax(A, b, scale=M)


def random_quadratic(d: int, mu: float, L: float, R: float, rng: np.random.Generator):
    """Quadratic with spectrum in ``[mu, L]`` (extremes included) and a start at distance ``R``."""
    U, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eig = rng.uniform(mu, L, size=d)
    eig[0], eig[-1] = L, mu
    Q = (U * eig) @ U.T
    x_star = rng.standard_normal(d)
    f = Quadratic(Q, Q @ x_star, 0.5 * x_star @ Q @ x_star)
    f.x_star, f.f_star = x_star, 0.0
    u = rng.standard_normal(d)
    x0 = x_star + R * u / np.linalg.norm(u)
    return f, x0


def random_polyhedral(d: int, M: float, R: float, rng: np.random.Generator, pieces: Optional[int] = None):
    """Max of affine pieces with gradients of norm ``<= M`` and a known minimizer."""
    m = pieces or 2 * d + 2
    k = int(rng.integers(2, min(d + 1, m) + 1))  # pieces active at the minimizer
    G = rng.standard_normal((m, d))
    w = rng.uniform(0.1, 1.0, size=k)
    G[k - 1] = -(w[: k - 1] @ G[: k - 1]) / w[k - 1]
    G *= M / np.linalg.norm(G, axis=1, keepdims=True) * rng.uniform(0.5, 1.0, size=(m, 1))
    x_star = rng.standard_normal(d)
    b = -G @ x_star
    b[k:] -= rng.uniform(0.0, 1.0, size=m - k) * M
    f = PiecewiseMax(G, b)
    f.x_star, f.f_star = x_star, 0.0
    u = rng.standard_normal(d)
    x0 = x_star + R * rng.uniform(0.2, 1.0) * u / np.linalg.norm(u)
    return f, x0


def from_dict(d: dict) -> Oracle:
    family = d.get("family")
    if family == "quadratic":
        return Quadratic(d["Q"], d.get("b"), d.get("c", 0.0))
    if family == "abs":
        return abs_function(d.get("M", 1.0))
    if family == "nesterov_max":
        return nesterov_max(d.get("M", 1.0), int(d["d"]))
    if family in ("piecewise_max", "polyhedral_max"):
        norm = None
        if "norm_center" in d:
            norm = (d["norm_center"], d["norm_radius"])
        return PiecewiseMax(d["A"], d["b"], d.get("scale", 1.0), norm)
    raise ValueError(f"unknown oracle family {family!r}")


def from_json(text: str) -> Oracle:
    return from_dict(json.loads(text))
