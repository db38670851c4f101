# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Mirrors ``_fallback``: 4th-order periodic differences and the bordered
LDL^T factor/solve for symmetric cyclic tridiagonal SPD systems.  The
factorization rejects nonpositive pivots (including the final Schur
complement), which is exactly the positive-definiteness test.
"""

import numpy as np

cimport numpy as cnp

BACKEND = "compiled"


def deriv4(f, double dx):
    cdef double[::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t n = fv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double c = 1.0 / (12.0 * dx)
    cdef Py_ssize_t j
    if n < 5:
        raise ValueError("deriv4 needs at least 5 points")
    for j in range(2, n - 2):
        o[j] = c * (8.0 * (fv[j + 1] - fv[j - 1]) - (fv[j + 2] - fv[j - 2]))
    o[0] = c * (8.0 * (fv[1] - fv[n - 1]) - (fv[2] - fv[n - 2]))
    o[1] = c * (8.0 * (fv[2] - fv[0]) - (fv[3] - fv[n - 1]))
    o[n - 2] = c * (8.0 * (fv[n - 1] - fv[n - 3]) - (fv[0] - fv[n - 4]))
    o[n - 1] = c * (8.0 * (fv[0] - fv[n - 2]) - (fv[1] - fv[n - 3]))
    return out


def cyclic_spd_factor(diag, off):
    cdef double[::1] d = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] e = np.ascontiguousarray(off, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0]
    if e.shape[0] != n:
        raise ValueError("diag and offdiag must have equal length")
    if n < 4:
        raise ValueError("cyclic solve needs at least 4 unknowns")
    cdef Py_ssize_t m = n - 1, i

    piv_arr = np.empty(m, dtype=np.float64)
    low_arr = np.empty(m - 1, dtype=np.float64)
    z_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] piv = piv_arr
    cdef double[::1] low = low_arr
    cdef double[::1] z = z_arr
    cdef double s

    piv[0] = d[0]
    if piv[0] <= 0.0:
        raise ValueError("matrix not positive definite (pivot 0)")
    for i in range(m - 1):
        low[i] = e[i] / piv[i]
        piv[i + 1] = d[i + 1] - e[i] * low[i]
        if piv[i + 1] <= 0.0:
            raise ValueError("matrix not positive definite (pivot)")

    # z = B^{-1} c with c = (e[n-1], 0, ..., 0, e[n-2])
    z[0] = e[n - 1]
    for i in range(1, m - 1):
        z[i] = -low[i - 1] * z[i - 1]
    z[m - 1] = e[n - 2] - low[m - 2] * z[m - 2]
    for i in range(m):
        z[i] /= piv[i]
    for i in range(m - 2, -1, -1):
        z[i] -= low[i] * z[i + 1]

    s = d[n - 1] - e[n - 1] * z[0] - e[n - 2] * z[m - 1]
    if s <= 0.0:
        raise ValueError("matrix not positive definite (Schur complement)")
    return (piv_arr, low_arr, z_arr, s, e[n - 1], e[n - 2])


def cyclic_spd_solve(factor, b):
    piv_arr, low_arr, z_arr, s_obj, c0_obj, cm1_obj = factor
    cdef double[::1] piv = piv_arr
    cdef double[::1] low = low_arr
    cdef double[::1] z = z_arr
    cdef double s = s_obj, c0 = c0_obj, cm1 = cm1_obj
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t m = piv.shape[0], i
    if bv.shape[0] != m + 1:
        raise ValueError("rhs length does not match factor")

    out = np.empty(m + 1, dtype=np.float64)
    cdef double[::1] o = out
    cdef double x_last

    o[0] = bv[0]
    for i in range(1, m):
        o[i] = bv[i] - low[i - 1] * o[i - 1]
    for i in range(m):
        o[i] /= piv[i]
    for i in range(m - 2, -1, -1):
        o[i] -= low[i] * o[i + 1]

    x_last = (bv[m] - c0 * o[0] - cm1 * o[m - 1]) / s
    for i in range(m):
        o[i] -= z[i] * x_last
    o[m] = x_last
    return out
