# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Schur-complement assembly for sparse symmetric constraint matrices."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def schur_complement(double[:, ::1] W, long[::1] indptr, long[::1] rows,
                     long[::1] cols, double[::1] vals):
    """Return ``M[i, j] = <A_i, W A_j W>``.

    ``A_k`` is given in CSR-like triplet form: entries ``indptr[k]`` to
    ``indptr[k+1]`` of ``rows``, ``cols``, ``vals`` (both triangles stored).
    """
    cdef Py_ssize_t n = W.shape[0]
    cdef Py_ssize_t m = indptr.shape[0] - 1
    cdef Py_ssize_t i, j, k, r, s, p, q
    cdef double v, acc
    out = np.zeros((m, m), dtype=np.float64)
    B_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] M = out
    cdef double[:, ::1] B = B_arr
    with nogil:
        for j in range(m):
            for r in range(n):
                for s in range(n):
                    B[r, s] = 0.0
            for k in range(indptr[j], indptr[j + 1]):
                p = rows[k]
                q = cols[k]
                v = vals[k]
                for r in range(n):
                    acc = v * W[r, p]
                    if acc != 0.0:
                        for s in range(n):
                            B[r, s] += acc * W[q, s]
            for i in range(j, m):
                acc = 0.0
                for k in range(indptr[i], indptr[i + 1]):
                    acc += vals[k] * B[rows[k], cols[k]]
                M[i, j] = acc
                M[j, i] = acc
    return out
