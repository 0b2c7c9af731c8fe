# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled power-iteration kernel (same contract as ``_kernels_py``)."""
import numpy as np

from libc.math cimport fabs


cdef void _record(double[:, ::1] V, Py_ssize_t k, bint hat, double[:, ::1] vnorm,
                  double[:, ::1] S) noexcept nogil:
    cdef Py_ssize_t n = V.shape[0], b = V.shape[1], i, c
    cdef double a
    for c in range(b):
        vnorm[k, c] = 0.0
    for i in range(n):
        for c in range(b):
            a = fabs(V[i, c])
            if hat:
                if a > vnorm[k, c]:
                    vnorm[k, c] = a
                S[k, i] += a
            else:
                vnorm[k, c] += a


def powers_block(const int[::1] indptr, const int[::1] indices, const double[::1] data,
                 double[:, ::1] V, int k_max, bint hat, double h,
                 double[:, ::1] vnorm, double[:, ::1] wnorm, double[:, ::1] S):
    cdef Py_ssize_t n = V.shape[0], b = V.shape[1]
    cdef Py_ssize_t i, c, p, col, k
    cdef double a, t
    cdef double[:, ::1] W = np.empty((n, b))
    cdef double[:, ::1] tmp
    cdef double[::1] acc = np.empty(b)
    with nogil:
        _record(V, 0, hat, vnorm, S)
        for k in range(1, k_max + 1):
            for i in range(n):
                for c in range(b):
                    W[i, c] = 0.0
                for p in range(indptr[i], indptr[i + 1]):
                    a = data[p]
                    col = indices[p]
                    for c in range(b):
                        W[i, c] = W[i, c] + a * V[col, c]
            if hat:
                for c in range(b):
                    acc[c] = 0.0
                    wnorm[k, c] = 0.0
                for i in range(n):
                    for c in range(b):
                        acc[c] = acc[c] + W[i, c]
                        if fabs(W[i, c]) > wnorm[k, c]:
                            wnorm[k, c] = fabs(W[i, c])
                for c in range(b):
                    acc[c] = acc[c] * h
                for i in range(n):
                    for c in range(b):
                        W[i, c] = W[i, c] - acc[c]
            with gil:
                tmp = V
                V = W
                W = tmp
            _record(V, k, hat, vnorm, S)
