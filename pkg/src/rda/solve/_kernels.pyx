# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gauss-Seidel and ILU(0) loops on CSR arrays."""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

ctypedef fused idx_t:
    int
    long long


def gs_sweeps(const idx_t[::1] indptr, const idx_t[::1] indices, const double[::1] data,
              double[::1] x, const double[::1] b, int nsweeps, bint backward):
    """In-place Gauss-Seidel sweeps on ``A x = b``."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, p, it, step, start
    cdef double s, diag
    if backward:
        start, step = n - 1, -1
    else:
        start, step = 0, 1
    for it in range(nsweeps):
        i = start
        while 0 <= i < n:
            s = b[i]
            diag = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                if indices[p] == i:
                    diag = data[p]
                else:
                    s -= data[p] * x[indices[p]]
            x[i] = s / diag
            i += step


def ilu0_factor(const idx_t[::1] indptr, const idx_t[::1] indices, double[::1] a,
                idx_t[::1] diag_ptr, double shift):
    """In-place ILU(0) on sorted CSR values; returns the number of shifted pivots."""
    cdef Py_ssize_t n = diag_ptr.shape[0]
    cdef Py_ssize_t i, kk, k, p, j, col
    cdef double mult
    cdef int shifted = 0
    cdef cnp.ndarray[cnp.int64_t, ndim=1] iw_arr = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] iw = iw_arr
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            iw[indices[p]] = p
        kk = indptr[i]
        while kk < diag_ptr[i]:
            k = indices[kk]
            mult = a[kk] / a[diag_ptr[k]]
            a[kk] = mult
            for p in range(diag_ptr[k] + 1, indptr[k + 1]):
                col = iw[indices[p]]
                if col >= 0:
                    a[col] -= mult * a[p]
            kk += 1
        if fabs(a[diag_ptr[i]]) == 0.0:
            a[diag_ptr[i]] = shift
            shifted += 1
        for p in range(indptr[i], indptr[i + 1]):
            iw[indices[p]] = -1
    return shifted


def ilu0_solve(const idx_t[::1] indptr, const idx_t[::1] indices, const double[::1] a,
               const idx_t[::1] diag_ptr, const double[::1] r):
    """Solve ``L U z = r`` with unit-lower ``L`` and upper ``U`` packed in ``a``."""
    cdef Py_ssize_t n = diag_ptr.shape[0]
    cdef Py_ssize_t i, p
    cdef double s
    out = np.empty(n)
    cdef double[::1] z = out
    for i in range(n):
        s = r[i]
        for p in range(indptr[i], diag_ptr[i]):
            s -= a[p] * z[indices[p]]
        z[i] = s
    for i in range(n - 1, -1, -1):
        s = z[i]
        for p in range(diag_ptr[i] + 1, indptr[i + 1]):
            s -= a[p] * z[indices[p]]
        z[i] = s / a[diag_ptr[i]]
    return out
