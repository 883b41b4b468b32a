# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled assembly of squared-exponential derivative kernel matrices.

Must agree with ``_kernels_py.cross_matrix`` to rounding.
"""
import numpy as np
from libc.math cimport exp

NAME = "cython"


cdef inline double _hermite(int n, double u) noexcept nogil:
    # probabilists' Hermite polynomials He_n, n <= 4
    cdef double u2
    if n == 0:
        return 1.0
    elif n == 1:
        return u
    elif n == 2:
        return u * u - 1.0
    elif n == 3:
        return u * u * u - 3.0 * u
    u2 = u * u
    return u2 * u2 - 6.0 * u2 + 3.0


def cross_matrix(const double[:, ::1] A, const double[:, ::1] B,
                 const double[::1] ls, double l2,
                 const int[::1] na, const int[::1] nb):
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], D = A.shape[1]
    cdef Py_ssize_t i, j, d
    cdef int k, nd
    cdef int total_b = 0
    cdef double s, u, num, den, sign0
    cdef double[::1] inv_ls = np.empty(D)
    cdef double[::1] den_d = np.empty(D)
    cdef int[::1] order = np.empty(D, dtype=np.intc)
    out = np.empty((n, m))
    cdef double[:, ::1] K = out

    for d in range(D):
        inv_ls[d] = 1.0 / ls[d]
        order[d] = na[d] + nb[d]
        total_b += nb[d]
        den_d[d] = 1.0
        for k in range(order[d]):
            den_d[d] *= ls[d]
    sign0 = -1.0 if total_b % 2 else 1.0
    den = 1.0
    for d in range(D):
        den *= den_d[d]

    with nogil:
        for i in range(n):
            for j in range(m):
                s = 0.0
                num = sign0
                for d in range(D):
                    u = (A[i, d] - B[j, d]) * inv_ls[d]
                    s += u * u
                    nd = order[d]
                    if nd:
                        if nd % 2:
                            num = -num * _hermite(nd, u)
                        else:
                            num = num * _hermite(nd, u)
                K[i, j] = ((l2 * num) / den) * exp(-0.5 * s)
    return out
