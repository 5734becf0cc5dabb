"""Condition numbers of ``A`` and of the preconditioned operator ``B^{-1} A``.

Without ``B`` the result is ``sigma_max / sigma_min`` of ``A``.  With an SPD
``B`` the default measures ``B^{-1} A`` in the ``B``-inner product, i.e. the
singular values of ``L^{-1} A L^{-T}`` for ``B = L L^T``; ``norm="l2"``
instead takes the Euclidean singular values of ``B^{-1} A``.
"""
import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh, splu, svds

DENSE_LIMIT = 6000


def _dense(M):
    return M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)


def singular_values(A, B=None, norm="B"):
    """Dense singular values (descending) of ``A`` or of ``B^{-1} A``."""
    Ad = _dense(A)
    if B is None:
        return scipy.linalg.svdvals(Ad)
    Bd = _dense(B)
    if norm == "l2":
        return scipy.linalg.svdvals(scipy.linalg.lu_solve(scipy.linalg.lu_factor(Bd), Ad))
    if norm != "B":
        raise ValueError("norm must be 'B' or 'l2'")
    try:
        L = scipy.linalg.cholesky(Bd, lower=True)
    except np.linalg.LinAlgError:
        raise ValueError("B must be symmetric positive definite") from None
    X = scipy.linalg.solve_triangular(L, Ad, lower=True)
    X = scipy.linalg.solve_triangular(L, X.T, lower=True).T
    return scipy.linalg.svdvals(X)


def condition_estimate(A, B=None, mode="dense", norm="B", limit=DENSE_LIMIT):
    """``sigma_max / sigma_min`` of ``A`` or of ``B^{-1} A``.

    ``mode="dense"`` uses a full SVD and needs ``n <= limit``.
    ``mode="iterative"`` uses Lanczos solves for the extreme singular
    values and their inverses (sparse LU); it is an estimate.
    """
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if mode == "dense":
        if n > limit:
            raise ValueError(f"dense condition estimate limited to n <= {limit} (got {n})")
        s = singular_values(A, B, norm)
        if s[-1] <= n * np.finfo(float).eps * s[0]:
            raise np.linalg.LinAlgError("matrix is numerically singular")
        return float(s[0] / s[-1])
    if mode != "iterative":
        raise ValueError("mode must be 'dense' or 'iterative'")
    if B is None:
        return _iterative_plain(A)
    if norm == "l2":
        return _iterative_l2(A, B)
    return _iterative_energy(A, B)


def _v0(n):
    return np.random.default_rng(0).standard_normal(n)


def _iterative_plain(A):
    A = sp.csc_matrix(A)
    lu = splu(A)
    fwd = LinearOperator(A.shape, matvec=lambda v: A @ v, rmatvec=lambda v: A.T @ v)
    inv = LinearOperator(A.shape, matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="T"))
    smax = svds(fwd, k=1, return_singular_vectors=False, v0=_v0(A.shape[0]), tol=1e-6)[0]
    sinv = svds(inv, k=1, return_singular_vectors=False, v0=_v0(A.shape[0]), tol=1e-6)[0]
    return float(smax * sinv)


def _iterative_l2(A, B):
    A, B = sp.csc_matrix(A), sp.csc_matrix(B)
    luA, luB = splu(A), splu(B)
    fwd = LinearOperator(A.shape, matvec=lambda v: luB.solve(A @ v),
                         rmatvec=lambda v: A.T @ luB.solve(v, trans="T"))
    inv = LinearOperator(A.shape, matvec=lambda v: luA.solve(B @ v),
                         rmatvec=lambda v: B.T @ luA.solve(v, trans="T"))
    smax = svds(fwd, k=1, return_singular_vectors=False, v0=_v0(A.shape[0]), tol=1e-6)[0]
    sinv = svds(inv, k=1, return_singular_vectors=False, v0=_v0(A.shape[0]), tol=1e-6)[0]
    return float(smax * sinv)


def _iterative_energy(A, B):
    # sigma^2 of L^{-1} A L^{-T} are the eigenvalues of (A^T B^{-1} A, B)
    A, B = sp.csc_matrix(A), sp.csc_matrix(B)
    luA, luB = splu(A), splu(B)
    n = A.shape[0]
    G = LinearOperator(A.shape, matvec=lambda v: A.T @ luB.solve(A @ v))
    Ginv = LinearOperator(A.shape, matvec=lambda v: luA.solve(B @ luA.solve(v, trans="T")))
    Binv = LinearOperator(A.shape, matvec=luB.solve)
    lmax = eigsh(G, k=1, M=B, Minv=Binv, which="LM", v0=_v0(n), tol=1e-6,
                 return_eigenvectors=False)[0]
    lmin_inv = eigsh(B, k=1, M=G, Minv=Ginv, which="LM", v0=_v0(n), tol=1e-6,
                     return_eigenvectors=False)[0]
    return float(np.sqrt(lmax * lmin_inv))
