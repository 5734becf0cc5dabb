"""Sparse solvers: GMRES, preconditioners, A0 multigrid, condition numbers."""
from .condition import condition_estimate, singular_values
from .csr import as_csr, read_matrix_market, write_matrix_market
from .gmres import GMRESBreakdown, SolveStats, gmres
from .kernels import BACKEND
from .multigrid import MGHierarchy, MGLevel, build_mg, mg_vcycle, prolongation
from .precond import (
    NAMES as PRECONDITIONERS,
    ILU0,
    Preconditioner,
    direct_precond,
    identity_precond,
    ilu0_precond,
    jacobi_precond,
    make_preconditioner,
    mg_precond,
)

__all__ = [
    "BACKEND", "GMRESBreakdown", "ILU0", "MGHierarchy", "MGLevel", "PRECONDITIONERS",
    "Preconditioner", "SolveStats", "as_csr", "build_mg", "condition_estimate",
    "direct_precond", "singular_values", "gmres", "identity_precond", "ilu0_precond",
    "jacobi_precond", "make_preconditioner", "mg_precond", "mg_vcycle", "prolongation",
    "read_matrix_market", "write_matrix_market",
]
