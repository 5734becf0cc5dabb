"""Pure-Python versions of the compiled kernels (same signatures)."""
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular


def _matrix(indptr, indices, data):
    n = len(indptr) - 1
    return sp.csr_matrix((np.asarray(data), np.asarray(indices), np.asarray(indptr)), shape=(n, n))


def gs_sweeps(indptr, indices, data, x, b, nsweeps, backward):
    """In-place Gauss-Seidel: ``x += (D + L)^{-1} (b - A x)`` per sweep."""
    A = _matrix(indptr, indices, data)
    T = sp.triu(A, format="csr") if backward else sp.tril(A, format="csr")
    x = np.asarray(x)
    b = np.asarray(b)
    for _ in range(nsweeps):
        x += spsolve_triangular(T, b - A @ x, lower=not backward)
    return x


def ilu0_factor(indptr, indices, a, diag_ptr, shift):
    indptr = np.asarray(indptr)
    indices = np.asarray(indices)
    a = np.asarray(a)
    diag_ptr = np.asarray(diag_ptr)
    n = len(diag_ptr)
    shifted = 0
    for i in range(n):
        row = slice(indptr[i], indptr[i + 1])
        pos = dict(zip(indices[row].tolist(), range(indptr[i], indptr[i + 1])))
        for kk in range(indptr[i], diag_ptr[i]):
            k = indices[kk]
            a[kk] /= a[diag_ptr[k]]
            tail = range(diag_ptr[k] + 1, indptr[k + 1])
            hit = [(pos[indices[p]], p) for p in tail if indices[p] in pos]
            if hit:
                dst, src = np.array(hit).T
                a[dst] -= a[kk] * a[src]
        if a[diag_ptr[i]] == 0.0:
            a[diag_ptr[i]] = shift
            shifted += 1
    return shifted


def ilu0_solve(indptr, indices, a, diag_ptr, r):
    n = len(diag_ptr)
    LU = _matrix(indptr, indices, a)
    L = sp.tril(LU, k=-1, format="csr") + sp.identity(n, format="csr")
    U = sp.triu(LU, format="csr")
    y = spsolve_triangular(L, np.asarray(r, dtype=float), lower=True, unit_diagonal=True)
    return spsolve_triangular(U, y, lower=False)
