"""Closed-form dual certificates for the greedy first-order method.

Two families are provided: bounded subgradients, with value ``M R / sqrt(N+1)``,
and smooth convex functions, with value ``L R^2 / (2 theta_N^2)``.  Each
comes with the rank-one vector whose outer product equals its dual slack
matrix, which gives an exact feasibility check that does not depend on an
eigensolver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import STAR, BasisIndex
from .classes import BoundedSubgradient, SmoothStronglyConvex
from .sdp.duals import DualCertificate


@dataclass(frozen=True)
class ThetaSequence:
    N: int
    values: tuple

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    @property
    def last(self) -> float:
        return self.values[-1]


def theta_sequence(N: int) -> ThetaSequence:
    """``theta_0 = 1``, ``theta_{i+1} = (1 + sqrt(4 theta_i^2 + 1)) / 2``, with
    the last step using ``8 theta^2`` in place of ``4 theta^2``."""
    if N < 1:
        raise ValueError(f"theta sequence needs N >= 1, got {N}")
    vals = [1.0]
    for i in range(1, N + 1):
        k = 8.0 if i == N else 4.0
        vals.append((1.0 + math.sqrt(k * vals[-1] ** 2 + 1.0)) / 2.0)
    return ThetaSequence(N, tuple(vals))


def _positive(**kw) -> None:
    for name, v in kw.items():
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be finite and > 0, got {v}")


def nonsmooth_certificate(M: float, R: float, N: int) -> DualCertificate:
    """Certificate of ``f_N - f_* <= M R / sqrt(N+1)`` over bounded subgradients."""
    _positive(M=M, R=R)
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    n1 = N + 1.0
    alpha = {str(i): R / (2.0 * M * n1**1.5) for i in range(N + 1)}
    for i in range(1, N + 1):
        alpha[f"{i - 1}:{i}"] = i / n1
    for i in range(N + 1):
        alpha[f"{STAR}:{i}"] = 1.0 / n1
    gamma = {f"{i}:{i}": (i + 1) / n1 for i in range(1, N + 1)}
    gamma.update({f"{i}:{i - 1}": -i / n1 for i in range(2, N + 1)})
    beta = {f"{i}:{j}": R / (M * n1**1.5) for i in range(1, N + 1) for j in range(i)}
    tau = M / (2.0 * R * math.sqrt(n1))
    return DualCertificate(N, BoundedSubgradient(M), alpha, beta, gamma, tau,
                           M * R / math.sqrt(n1), R)


def nonsmooth_slack_vector(M: float, R: float, N: int):
    """``(scale, v)`` with dual slack ``scale * v v^T`` for :func:`nonsmooth_certificate`."""
    basis = BasisIndex(N)
    v = basis.x(0) - basis.x(STAR)
    for i in range(N + 1):
        v = v - R / (M * math.sqrt(N + 1)) * basis.g(i)
    return M / (2.0 * R * math.sqrt(N + 1)), v


def smooth_certificate(L: float, R: float, N: int) -> DualCertificate:
    """Certificate of ``f_N - f_* <= L R^2 / (2 theta_N^2)`` over smooth convex functions."""
    _positive(L=L, R=R)
    th = theta_sequence(N).values
    tN2 = th[N] ** 2
    alpha = {}
    for i in range(1, N + 1):
        alpha[f"{i - 1}:{i}"] = 2.0 * th[i - 1] ** 2 / tN2
    for i in range(N):
        alpha[f"{STAR}:{i}"] = 2.0 * th[i] / tN2
    alpha[f"{STAR}:{N}"] = 1.0 / th[N]
    gamma = {f"{i}:{i - 1}": -2.0 * th[i - 1] ** 2 / tN2 for i in range(2, N + 1)}
    gamma.update({f"{i}:{i}": 2.0 * th[i] ** 2 / tN2 for i in range(1, N)})
    gamma[f"{N}:{N}"] = 1.0
    beta = {}
    for i in range(2, N):
        for j in range(i - 1):
            beta[f"{i}:{j}"] = 4.0 * th[i] * th[j] / (L * tN2)
    for i in range(1, N):
        beta[f"{i}:{i - 1}"] = (2.0 * th[i - 1] ** 2 + 4.0 * th[i - 1] * th[i]) / (L * tN2)
    for j in range(N - 1):
        beta[f"{N}:{j}"] = 2.0 * th[j] / (L * th[N])
    beta[f"{N}:{N - 1}"] = (2.0 * th[N - 1] / th[N] + 2.0 * th[N - 1] ** 2 / tN2) / L
    tau = L / (2.0 * tN2)
    return DualCertificate(N, SmoothStronglyConvex(0.0, L), alpha, beta, gamma, tau,
                           L * R**2 / (2.0 * tN2), R)


def smooth_slack_vector(L: float, R: float, N: int):
    """``(scale, w)`` with dual slack ``scale * w w^T`` for :func:`smooth_certificate`."""
    th = theta_sequence(N).values
    basis = BasisIndex(N)
    w = basis.x(0) - basis.x(STAR) - th[N] / L * basis.g(N)
    for i in range(N):
        w = w - 2.0 / L * th[i] * basis.g(i)
    return L / (2.0 * th[N] ** 2), w
