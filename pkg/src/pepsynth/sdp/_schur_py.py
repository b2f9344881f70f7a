"""Numpy implementation of the Schur-complement assembly (fallback backend)."""
import numpy as np


def schur_complement(W, indptr, rows, cols, vals):
    """Return ``M[i, j] = <A_i, W A_j W>`` for sparse symmetric ``A_k``."""
    n = W.shape[0]
    m = len(indptr) - 1
    which = np.repeat(np.arange(m), np.diff(indptr))
    A = np.zeros((m, n, n))
    np.add.at(A, (which, rows, cols), vals)
    B = W @ A @ W
    return A.reshape(m, -1) @ B.reshape(m, -1).T
