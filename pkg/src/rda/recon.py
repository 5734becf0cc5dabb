"""Constrained least-squares reconstruction on element patches.

For every element ``K`` the fitted polynomial is written in the scaled,
centered monomial basis of ``K``.  All non-constant basis functions vanish at
the barycenter, so the constraint ``p(x_K) = v_K`` fixes the constant
coefficient and the remaining ones solve an ordinary least-squares problem.
"""
from dataclasses import dataclass, field
import warnings

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .basis import dim_poly, monomials
from .patch import PatchSet


class UnisolvenceError(ValueError):
    """A patch cannot determine a unique degree-m fit."""

    def __init__(self, element, rank, needed):
        super().__init__(
            f"patch of element {element} is not unisolvent: rank {rank} < dim P_m = {needed}"
        )
        self.element = element


@dataclass
class LocalPolynomial:
    owner: int
    degree: int
    center: np.ndarray
    scale: float
    coeffs: np.ndarray

    def __call__(self, x):
        return monomials(x, self.center, self.scale, self.degree) @ self.coeffs


def _fit_matrix(V1, tol_rel=1e-10):
    """Pseudo-inverse and rank of (a stack of) design matrices without the owner row."""
    V1 = np.asarray(V1, dtype=float)
    single = V1.ndim == 2
    if single:
        V1 = V1[None]
    U, s, Wt = np.linalg.svd(V1, full_matrices=False)
    colmax = np.sqrt((V1 ** 2).sum(axis=1)).max(axis=1)
    keep = s > tol_rel * colmax[:, None]
    rank = keep.sum(axis=1)
    inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    pinv = np.einsum("gji,gj,gkj->gik", Wt, inv, U)
    if single:
        return pinv[0], int(rank[0]), V1.shape[-1]
    return pinv, rank, V1.shape[-1]


def local_fit(patch, m, values, mesh, allow_fallback=False):
    """Constrained fit on one patch; ``values`` are ordered like ``patch.members``."""
    values = np.asarray(values, dtype=float)
    K = patch.owner
    c, h = mesh.barycenters[K], mesh.diameters[K]
    nb = dim_poly(m, mesh.dim)
    coeffs = np.zeros(nb)
    coeffs[0] = values[0]
    if m == 0:
        return LocalPolynomial(K, m, c, h, coeffs)
    V = monomials(patch.collocation, c, h, m)
    pinv, rank, nb1 = _fit_matrix(V[1:, 1:])
    if rank < nb1 and not allow_fallback:
        raise UnisolvenceError(K, rank + 1, nb)
    coeffs[1:] = pinv @ (values[1:] - values[0])
    return LocalPolynomial(K, m, c, h, coeffs)


@dataclass
class ReconstructionOperator:
    """Sparse map from element values to stacked modal coefficients.

    ``R`` has shape ``(n_e * nb, n_e)``; rows ``K*nb : (K+1)*nb`` hold the
    coefficients of the fit on element ``K``.
    """

    m: int
    dim: int
    nb: int
    R: sp.csr_matrix = field(repr=False)
    patches: PatchSet = field(repr=False)
    rank_ok: np.ndarray = field(repr=False)
    fallback_used: bool = False
    lambda_est: np.ndarray = field(default=None, repr=False)

    @property
    def n_elements(self):
        return self.R.shape[1]

    @property
    def lambda_max(self):
        return None if self.lambda_est is None else float(np.max(self.lambda_est))

    def coefficients(self, dofs):
        return (self.R @ np.asarray(dofs, dtype=float)).reshape(-1, self.nb)

    def support(self, j):
        """Elements whose patch contains element ``j``."""
        ps = self.patches
        owners = np.repeat(np.arange(len(ps)), ps.sizes())
        return np.unique(owners[ps.members == j])


def build_operator(mesh, patches, m, allow_fallback=False):
    """Assemble the global reconstruction operator, vectorised by patch size."""
    n = mesh.n_elements
    d = mesh.dim
    nb = dim_poly(m, d)
    sizes = patches.sizes()
    blocks = [None] * n
    rank_ok = np.ones(n, dtype=bool)
    row_nnz = np.repeat(sizes, nb)
    indptr = np.concatenate([[0], np.cumsum(row_nnz)]).astype(np.int64)
    indices = np.empty(indptr[-1], dtype=np.int32)
    data = np.zeros(indptr[-1])
    start = patches.ptr
    for s in np.unique(sizes):
        ks = np.flatnonzero(sizes == s)
        M = np.stack([patches.members[start[ks] + i] for i in range(s)], axis=1)
        B = np.zeros((len(ks), nb, s))
        B[:, 0, 0] = 1.0
        if m > 0:
            if s < 2:
                rank = np.zeros(len(ks), dtype=np.int64)
                pinv = np.zeros((len(ks), nb - 1, max(s - 1, 0)))
            else:
                X = mesh.barycenters[M[:, 1:]]
                V1 = monomials(X, mesh.barycenters[ks][:, None, :],
                               mesh.diameters[ks][:, None], m)[:, :, 1:]
                pinv, rank, _ = _fit_matrix(V1)
            bad = rank < nb - 1
            if bad.any():
                rank_ok[ks[bad]] = False
                if not allow_fallback:
                    k = int(ks[np.flatnonzero(bad)[0]])
                    raise UnisolvenceError(k, int(rank[np.flatnonzero(bad)[0]]) + 1, nb)
            if s >= 2:
                B[:, 1:, 1:] = pinv
                B[:, 1:, 0] = -pinv.sum(axis=2)
        # scatter: row (K, i) starts at indptr[K * nb + i]
        for i in range(nb):
            pos = indptr[ks * nb + i]
            idx = pos[:, None] + np.arange(s)[None, :]
            indices[idx] = M
            data[idx] = B[:, i, :]
    R = sp.csr_matrix((data, indices, indptr), shape=(n * nb, n))
    R.sort_indices()
    if not rank_ok.all():
        warnings.warn(f"{(~rank_ok).sum()} patches are not unisolvent; minimum-norm fits used")
    return ReconstructionOperator(m=m, dim=d, nb=nb, R=R, patches=patches, rank_ok=rank_ok,
                                  fallback_used=not rank_ok.all())


def evaluate(op, mesh, dofs, k, x):
    """Value of the reconstruction of ``dofs`` on element ``k`` at points ``x``."""
    coeffs = op.R[k * op.nb:(k + 1) * op.nb] @ np.asarray(dofs, dtype=float)
    return monomials(np.asarray(x, dtype=float), mesh.barycenters[k], mesh.diameters[k],
                     op.m) @ coeffs


def default_samples(mesh, patch):
    pts = [mesh.barycenters[patch.members]]
    for e in patch.members:
        pts.append(mesh.vertices[mesh.element_vertices(e)])
    return np.unique(np.round(np.vstack(pts), 14), axis=0)


def lambda_estimate(patch, m, mesh, samples=None):
    """Sampled stability ratio ``max_S |p| / max_I |p|`` over degree-m polynomials.

    For each sample point one small LP maximises ``p(s)`` subject to
    ``|p| <= 1`` on the collocation points.  The result is exact for the
    sample set and a lower bound for the supremum over the whole patch.
    Returns ``inf`` when the collocation Vandermonde is rank deficient.
    """
    K = patch.owner
    c, h = mesh.barycenters[K], mesh.diameters[K]
    if samples is None:
        samples = default_samples(mesh, patch)
    EI = monomials(patch.collocation, c, h, m)
    ES = monomials(np.asarray(samples, dtype=float), c, h, m)
    if np.linalg.matrix_rank(EI, tol=1e-10 * np.abs(EI).max()) < EI.shape[1]:
        return np.inf
    A_ub = np.vstack([EI, -EI])
    b_ub = np.ones(2 * len(EI))
    bounds = [(None, None)] * EI.shape[1]
    best = 1.0
    for row in ES:
        res = linprog(-row, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if res.status == 0:
            best = max(best, -res.fun)
    return float(best)


def lambda_estimates(op, mesh, elements=None):
    """Fill ``op.lambda_est`` for ``elements`` (default: all); others stay NaN."""
    n = mesh.n_elements
    est = np.full(n, np.nan) if op.lambda_est is None else op.lambda_est
    ks = range(n) if elements is None else elements
    for k in ks:
        est[k] = lambda_estimate(op.patches.patch(mesh, k), op.m, mesh)
    op.lambda_est = est
    return est
