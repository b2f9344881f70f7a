"""Index set and Gram-basis bookkeeping shared by the PEP builders.

Points are indexed by ``I*_N = {*, 0, ..., N}``.  The Gram matrix ``G`` has
side ``2N+2`` and is the Gram matrix of

    P = [g_0 ... g_N | x_1 - x_0 ... x_N - x_0 | x_* - x_0]

while the value vector is ``F = [f_0 ... f_N f_*]``.
"""
from __future__ import annotations

from typing import Iterator, Optional, Union

import numpy as np

STAR = "*"

Index = Union[int, str]


def index_set(N: int) -> list:
    """Return ``[*, 0, 1, ..., N]``."""
    return [STAR] + list(range(N + 1))


def parse_index(label) -> Index:
    if isinstance(label, str):
        label = label.strip()
        if label == STAR:
            return STAR
        return int(label)
    return int(label)


def index_label(i: Index) -> str:
    return STAR if i == STAR else str(int(i))


def sym(u: np.ndarray, v: np.ndarray, out: Optional[np.ndarray] = None, scale: float = 1.0) -> np.ndarray:
    """Symmetric outer product ``scale (u v^T + v u^T) / 2``, added into ``out`` if given."""
    if out is None:
        out = np.zeros((len(u), len(u)))
    # basis vectors have at most a few nonzeros, so fill entries directly
    iu, iv = u.nonzero()[0], v.nonzero()[0]
    for a in iu.tolist():
        for b in iv.tolist():
            w = 0.5 * scale * u[a] * v[b]
            out[a, b] += w
            out[b, a] += w
    return out


def sym_terms(u: dict, v: dict, out: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """:func:`sym` for sparse vectors given as ``{index: coefficient}``."""
    for a, ua in u.items():
        for b, vb in v.items():
            w = 0.5 * scale * ua * vb
            out[a, b] += w
            out[b, a] += w
    return out


def terms_diff(u: dict, v: dict) -> dict:
    out = dict(u)
    for k, c in v.items():
        out[k] = out.get(k, 0.0) - c
    return {k: c for k, c in out.items() if c != 0.0}


def matrix_block(count: int, side: int) -> np.ndarray:
    """Zeroed stack of ``count`` square matrices.

    One allocation lets the operating system hand out zero pages lazily,
    which matters because constraint matrices touch only a few entries.
    """
    return np.zeros((count, side, side))


class BasisIndex:
    """Unit and zero vectors selecting points, gradients and values."""

    def __init__(self, N: int):
        if N < 0:
            raise ValueError(f"iteration count must be >= 0, got {N}")
        self.N = N
        self.gram_side = 2 * N + 2
        self.value_len = N + 2

    def __repr__(self) -> str:
        return f"BasisIndex(N={self.N})"

    def indices(self) -> list:
        return index_set(self.N)

    def pairs(self) -> Iterator[tuple]:
        """Ordered pairs ``(i, j)`` with ``i != j`` over ``I*_N``."""
        idx = self.indices()
        for i in idx:
            for j in idx:
                if i != j:
                    yield i, j

    def _check(self, i: Index) -> None:
        if i != STAR and not (0 <= int(i) <= self.N):
            raise IndexError(f"index {i!r} outside I*_{self.N}")

    def x(self, i: Index) -> np.ndarray:
        self._check(i)
        v = np.zeros(self.gram_side)
        if i == STAR:
            v[2 * self.N + 1] = 1.0
        elif i >= 1:
            v[self.N + i] = 1.0
        return v

    def x_terms(self, i: Index) -> dict:
        """Sparse form of :meth:`x`."""
        self._check(i)
        if i == STAR:
            return {2 * self.N + 1: 1.0}
        return {self.N + i: 1.0} if i >= 1 else {}

    def g_terms(self, i: Index) -> dict:
        self._check(i)
        return {} if i == STAR else {i: 1.0}

    def g(self, i: Index) -> np.ndarray:
        self._check(i)
        v = np.zeros(self.gram_side)
        if i != STAR:
            v[i] = 1.0
        return v

    def f(self, i: Index) -> np.ndarray:
        self._check(i)
        v = np.zeros(self.value_len)
        v[self.N + 1 if i == STAR else i] = 1.0
        return v
