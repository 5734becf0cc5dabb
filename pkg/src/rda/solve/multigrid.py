"""Geometric multigrid for the piecewise-constant jump-penalty matrix."""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import kernels
from .csr import as_csr, index_arrays


@dataclass
class MGLevel:
    mesh: object = field(repr=False)
    A: sp.csr_matrix = field(repr=False)
    P: sp.csr_matrix = field(default=None, repr=False)  # from the next coarser level
    indptr: np.ndarray = field(default=None, repr=False)
    indices: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.A = as_csr(self.A)
        self.indptr, self.indices = index_arrays(self.A)

    @property
    def n(self):
        return self.A.shape[0]


@dataclass
class MGHierarchy:
    """Levels ordered coarsest first; ``levels[k].P`` maps level ``k-1`` to ``k``."""

    levels: list
    pre: int = 10
    post: int = 10
    q: int = 1
    coarse: str = "rediscretize"
    coarse_lu: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.coarse_lu is None:
            self.coarse_lu = splu(self.levels[0].A.tocsc())

    @property
    def n(self):
        return self.levels[-1].n

    @property
    def n_levels(self):
        return len(self.levels)

    def vcycle(self, r):
        """One cycle from a zero initial guess: a fixed linear map of ``r``."""
        r = np.ascontiguousarray(r, dtype=float)
        return self._solve(np.zeros_like(r), r, len(self.levels) - 1)

    def _solve(self, x, b, k):
        if k == 0:
            return self.coarse_lu.solve(b)
        lev = self.levels[k]
        kernels.gs_sweeps(lev.indptr, lev.indices, lev.A.data, x, b, self.pre, False)
        y = lev.P.T @ (b - lev.A @ x)
        z = np.zeros(self.levels[k - 1].n)
        for _ in range(self.q):
            z = self._solve(z, y, k - 1)
        x += lev.P @ z
        kernels.gs_sweeps(lev.indptr, lev.indices, lev.A.data, x, b, self.post, True)
        return x

    def galerkin_mismatch(self):
        """Per level ``max|P^T A_k P - A_{k-1}| / max|A_{k-1}|`` and the best scalar ratio."""
        out = []
        for k in range(1, len(self.levels)):
            G = (self.levels[k].P.T @ self.levels[k].A @ self.levels[k].P).tocsr()
            C = self.levels[k - 1].A
            scale = np.abs(C).max()
            ratio = float((G.multiply(C)).sum() / C.multiply(C).sum())
            out.append({"level": k, "mismatch": float(np.abs(G - C).max() / scale),
                        "ratio": ratio})
        return out


def prolongation(coarse, fine):
    """Injection of piecewise constants from ``coarse`` to its refinement ``fine``."""
    parent = getattr(fine, "parent", None)
    if parent is None or len(parent) != fine.n_elements:
        raise ValueError("meshes are not nested: fine mesh has no parent map")
    parent = np.asarray(parent)
    if parent.min() < 0 or parent.max() >= coarse.n_elements:
        raise ValueError("meshes are not nested: parent index out of range")
    vol = np.bincount(parent, weights=fine.volumes, minlength=coarse.n_elements)
    if not np.allclose(vol, coarse.volumes, rtol=1e-10, atol=0):
        raise ValueError("meshes are not nested: children do not tile their parents")
    nf = fine.n_elements
    return sp.csr_matrix((np.ones(nf), (np.arange(nf), parent)), shape=(nf, coarse.n_elements))


def build_mg(meshes, q=1, pre=10, post=10, coarse="rediscretize", assemble=None):
    """Hierarchy from nested meshes (coarsest first).

    ``coarse="rediscretize"`` assembles the jump-penalty matrix on every
    mesh; ``coarse="galerkin"`` uses ``P^T A P`` below the finest level.
    """
    if coarse not in ("rediscretize", "galerkin"):
        raise ValueError("coarse must be 'rediscretize' or 'galerkin'")
    if assemble is None:
        from ..dgcore import assemble_a0

        def assemble(mesh):
            return assemble_a0(mesh).A_mat
    if not meshes:
        raise ValueError("need at least one mesh")
    Ps = [None] + [prolongation(meshes[i - 1], meshes[i]) for i in range(1, len(meshes))]
    if coarse == "rediscretize":
        As = [assemble(mh) for mh in meshes]
    else:
        As = [None] * len(meshes)
        As[-1] = assemble(meshes[-1])
        for i in range(len(meshes) - 1, 0, -1):
            As[i - 1] = (Ps[i].T @ As[i] @ Ps[i]).tocsr()
    levels = [MGLevel(mesh=mh, A=A, P=P) for mh, A, P in zip(meshes, As, Ps)]
    return MGHierarchy(levels=levels, pre=pre, post=post, q=q, coarse=coarse)


def mg_vcycle(hierarchy, r):
    return hierarchy.vcycle(r)
