"""Fixed linear preconditioners ``z = M^{-1} r``."""
import warnings

import numpy as np
from scipy.sparse.linalg import splu

from . import kernels
from .csr import as_csr, diagonal_pointers, index_arrays, max_abs, with_diagonal

NAMES = ("none", "jacobi", "ilu0", "a0-direct", "a0-mg")


class Preconditioner:
    """Callable wrapper: ``M(r)`` returns ``M^{-1} r``."""

    def __init__(self, apply, name, n=None):
        self._apply = apply
        self.name = name
        self.n = n

    def __call__(self, r):
        return self._apply(np.asarray(r, dtype=float))

    def __repr__(self):
        return f"Preconditioner({self.name!r})"


def identity_precond(n=None):
    return Preconditioner(lambda r: r.copy(), "none", n)


def jacobi_precond(A):
    d = as_csr(A).diagonal()
    if np.any(d == 0):
        raise ValueError("Jacobi needs a nonzero diagonal")
    inv = 1.0 / d
    return Preconditioner(lambda r: inv * r, "jacobi", len(d))


class ILU0:
    """Incomplete LU with the sparsity of ``A`` (no fill)."""

    def __init__(self, A):
        A = with_diagonal(A)
        self.indptr, self.indices = index_arrays(A)
        self.values = A.data.copy()
        self.diag_ptr = diagonal_pointers(A).astype(self.indptr.dtype)
        shift = 1e-12 * max_abs(A)
        self.shifted = kernels.ilu0_factor(self.indptr, self.indices, self.values,
                                           self.diag_ptr, shift)
        if self.shifted:
            warnings.warn(f"ILU(0): {self.shifted} zero pivots replaced by {shift:.3g}")

    def solve(self, r):
        return kernels.ilu0_solve(self.indptr, self.indices, self.values, self.diag_ptr,
                                  np.ascontiguousarray(r, dtype=float))


def ilu0_precond(A):
    f = ILU0(A)
    return Preconditioner(f.solve, "ilu0", len(f.diag_ptr))


def direct_precond(B, name="a0-direct"):
    """Exact solve with a sparse LU factorization of ``B``."""
    lu = splu(as_csr(B).tocsc())
    return Preconditioner(lu.solve, name, B.shape[0])


def mg_precond(hierarchy):
    return Preconditioner(hierarchy.vcycle, "a0-mg", hierarchy.n)


def make_preconditioner(name, A=None, A0=None, hierarchy=None):
    """Build a preconditioner by name (one of :data:`NAMES`)."""
    if name == "none":
        return identity_precond(None if A is None else A.shape[0])
    if name == "jacobi":
        return jacobi_precond(A)
    if name == "ilu0":
        return ilu0_precond(A)
    if name == "a0-direct":
        return direct_precond(A0)
    if name == "a0-mg":
        if hierarchy is None:
            raise ValueError("a0-mg needs a nested mesh hierarchy")
        return mg_precond(hierarchy)
    raise ValueError(f"unknown preconditioner {name!r}; choose from {NAMES}")
