"""The first-order methods and a common runner producing trajectories."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from ..certificates import theta_sequence
from .oracles import Oracle
from .search import (
    exact_line_search,
    orthogonality_residual,
    select_orthogonal_subgradient,
    subspace_minimize,
)


@dataclass(frozen=True)
class GFOM:
    tol: float = 1e-10
    cap: int = 6


@dataclass(frozen=True)
class SsepSubgradient:
    M: float
    R: float


@dataclass(frozen=True)
class SsepSubgradientLS:
    tol: float = 1e-10


@dataclass(frozen=True)
class OGM:
    L: float


@dataclass(frozen=True)
class OGMLS:
    tol: float = 1e-10


@dataclass(frozen=True)
class UM:
    tol: float = 1e-10


@dataclass(frozen=True)
class FGM:
    mu: float
    L: float

    @property
    def momentum(self) -> float:
        q = math.sqrt(self.mu / self.L)
        return (1.0 - q) / (1.0 + q)


@dataclass(frozen=True)
class Canonical:
    """``x_i = x_0 - sum_{j<i} h[i, j] g_j``."""

    h: np.ndarray


@dataclass(frozen=True)
class Factored:
    zeta: np.ndarray
    eta: np.ndarray
    L: float


MethodSpec = Union[GFOM, SsepSubgradient, SsepSubgradientLS, OGM, OGMLS, UM, FGM, Canonical, Factored]


def _check_positive(**kw):
    for k, v in kw.items():
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{k} must be positive, got {v}")


@dataclass
class Trajectory:
    method: str
    xs: np.ndarray
    gs: np.ndarray
    fs: np.ndarray
    residuals: np.ndarray
    flags: List[str] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def N(self) -> int:
        return len(self.fs) - 1

    def gaps(self, f_star: float) -> np.ndarray:
        return self.fs - f_star

    def to_csv(self, f_star: Optional[float] = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "f", "f_gap", "orthogonality_residual"])
        for i, fv in enumerate(self.fs):
            gap = "" if f_star is None else f"{fv - f_star:.10g}"
            r = self.residuals[i]
            w.writerow([i, f"{fv:.12g}", gap, "" if np.isnan(r) else f"{r:.3g}"])
        return buf.getvalue()


class _Recorder:
    def __init__(self, oracle: Oracle, x0):
        self.oracle = oracle
        self.xs, self.gs, self.fs, self.res = [], [], [], []
        self.flags: List[str] = []
        self.push(np.asarray(x0, dtype=float))

    def push(self, x, g=None, residual=float("nan")):
        f, g0 = self.oracle.evaluate(x)
        g = g0 if g is None else g
        if not (np.isfinite(f) and np.all(np.isfinite(g)) and np.all(np.isfinite(x))):
            raise FloatingPointError("non-finite iterate, value or subgradient")
        self.xs.append(np.array(x, dtype=float))
        self.gs.append(np.array(g, dtype=float))
        self.fs.append(float(f))
        self.res.append(residual)
        return g


def _ssep_point(xs, gs, i):
    y = i / (i + 1.0) * xs[i - 1] + xs[0] / (i + 1.0)
    d = np.sum(gs[:i], axis=0) / (i + 1.0)
    return y, d


def _ogm_point(xs, gs, th, i):
    t = th[i]
    y = (1.0 - 1.0 / t) * xs[i - 1] + xs[0] / t
    d = (1.0 - 1.0 / t) * gs[i - 1] + 2.0 / t * sum(th[j] * gs[j] for j in range(i))
    return y, d


def _spec_name(spec) -> str:
    return type(spec).__name__


def run_method(spec: MethodSpec, oracle: Oracle, x0, N: int) -> Trajectory:
    """Run ``N`` iterations of ``spec`` from ``x0``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    t0 = time.perf_counter()
    rec = _Recorder(oracle, x0)
    xs, gs = rec.xs, rec.gs

    if isinstance(spec, GFOM):
        for i in range(1, N + 1):
            x, ok = subspace_minimize(oracle, xs[0], gs[:i], spec.tol, cap=spec.cap, return_status=True)
            if not ok:
                rec.flags.append(f"subspace search not converged at step {i}")
            g = select_orthogonal_subgradient(oracle, x, gs[:i])
            rec.push(x, g, orthogonality_residual(g, gs[:i]))

    elif isinstance(spec, SsepSubgradient):
        _check_positive(M=spec.M, R=spec.R)
        step = spec.R / (spec.M * math.sqrt(N + 1))
        for i in range(1, N + 1):
            y, d = _ssep_point(xs, gs, i)
            rec.push(y - step * d)

    elif isinstance(spec, SsepSubgradientLS):
        for i in range(1, N + 1):
            y, d = _ssep_point(xs, gs, i)
            x = y if np.linalg.norm(d) == 0 else y - exact_line_search(oracle, y, d, spec.tol) * d
            g = select_orthogonal_subgradient(oracle, x, [d])
            rec.push(x, g, orthogonality_residual(g, [d]))

    elif isinstance(spec, (OGM, OGMLS)):
        if N >= 1:
            th = theta_sequence(N).values
        for i in range(1, N + 1):
            y, d = _ogm_point(xs, gs, th, i)
            if isinstance(spec, OGM):
                _check_positive(L=spec.L)
                rec.push(y - d / spec.L)
            else:
                x = y if np.linalg.norm(d) == 0 else y - exact_line_search(oracle, y, d, spec.tol) * d
                rec.push(x, None, orthogonality_residual(oracle.evaluate(x)[1], [d]))

    elif isinstance(spec, UM):
        if N >= 1:
            th = theta_sequence(N).values
        for i in range(1, N + 1):
            y1, d1 = _ssep_point(xs, gs, i)
            y2, d2 = _ogm_point(xs, gs, th, i)
            # the two anchors coincide at the first step up to rounding
            floor = 1e-12 * max(1.0, np.linalg.norm(y2), np.linalg.norm(d2))
            dirs = [v for v in (y1 - y2, d1, d2) if np.linalg.norm(v) > floor]
            x, ok = subspace_minimize(oracle, y2, dirs, spec.tol, return_status=True)
            if not ok:
                rec.flags.append(f"subspace search not converged at step {i}")
            g = select_orthogonal_subgradient(oracle, x, dirs)
            rec.push(x, g, orthogonality_residual(g, dirs))

    elif isinstance(spec, FGM):
        _check_positive(L=spec.L)
        if not 0 <= spec.mu < spec.L:
            raise ValueError("FGM needs 0 <= mu < L")
        q = spec.momentum
        y_prev = xs[0]
        for i in range(1, N + 1):
            y = xs[i - 1] - gs[i - 1] / spec.L
            # the final point returned is the gradient step y_N
            rec.push(y if i == N else y + q * (y - y_prev))
            y_prev = y

    elif isinstance(spec, Canonical):
        h = np.asarray(getattr(spec.h, "h", spec.h), dtype=float)
        if h.shape[0] < N + 1:
            raise ValueError(f"step array covers {h.shape[0] - 1} iterations, {N} requested")
        for i in range(1, N + 1):
            rec.push(xs[0] - sum(h[i, j] * gs[j] for j in range(i)))

    elif isinstance(spec, Factored):
        _check_positive(L=spec.L)
        if len(spec.zeta) < N or len(spec.eta) < N:
            raise ValueError(f"factored parameters cover fewer than {N} iterations")
        y_prev = xs[0]
        for i in range(1, N + 1):
            y = xs[i - 1] - gs[i - 1] / spec.L
            z, e = spec.zeta[i - 1], spec.eta[i - 1]
            rec.push(y + z * (y - y_prev) + e * (y - xs[i - 1]))
            y_prev = y
    else:
        raise TypeError(f"unknown method spec {spec!r}")

    return Trajectory(
        _spec_name(spec), np.array(xs), np.array(gs), np.array(rec.fs), np.array(rec.res),
        rec.flags, time.perf_counter() - t0,
    )


class _UnitGradients(Oracle):
    """Returns ``e_{k+1}`` at the ``k``-th evaluation, so that running a
    fixed-step method from ``x_0 = e_0`` exposes its coefficients."""

    def __init__(self, N: int):
        self.d = N + 2
        self.calls = 0

    def evaluate(self, x):
        g = np.zeros(self.d)
        g[self.calls + 1] = 1.0
        self.calls += 1
        return 0.0, g


_FIXED_STEP = (SsepSubgradient, OGM, FGM, Canonical, Factored)


def unroll_canonical(spec: MethodSpec, N: int) -> np.ndarray:
    """Step array ``h`` with ``x_i = x_0 - sum_j h[i, j] g_j`` for a fixed-step method."""
    if not isinstance(spec, _FIXED_STEP):
        raise TypeError(f"{type(spec).__name__} is not a fixed-step method")
    x0 = np.zeros(N + 2)
    x0[0] = 1.0
    traj = run_method(spec, _UnitGradients(N), x0, N)
    h = np.zeros((N + 1, N + 1))
    for i in range(1, N + 1):
        h[i, :i] = -traj.xs[i][1: i + 1]
    return h
