"""CSR storage helpers on top of :mod:`scipy.sparse`."""
import numpy as np
import scipy.io
import scipy.sparse as sp


def as_csr(A):
    """Canonical CSR copy-free view: sorted unique column indices, float64."""
    A = sp.csr_matrix(A, dtype=float)
    if not A.has_canonical_format:
        A.sum_duplicates()
    A.sort_indices()
    return A


def index_arrays(A):
    """``indptr`` and ``indices`` with one shared integer dtype (for kernels)."""
    dt = np.int32 if max(A.nnz, A.shape[0]) < 2**31 - 1 else np.int64
    return (np.ascontiguousarray(A.indptr, dtype=dt),
            np.ascontiguousarray(A.indices, dtype=dt))


def with_diagonal(A):
    """Same matrix with every diagonal entry present in the pattern."""
    A = as_csr(A)
    n = A.shape[0]
    coo = A.tocoo()
    rows = np.concatenate([coo.row, np.arange(n)])
    cols = np.concatenate([coo.col, np.arange(n)])
    vals = np.concatenate([coo.data, np.zeros(n)])
    out = sp.csr_matrix((vals, (rows, cols)), shape=A.shape)
    out.sort_indices()
    return out


def diagonal_pointers(A):
    """Position of the diagonal entry in each row of a canonical CSR matrix."""
    n = A.shape[0]
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    hit = np.flatnonzero(A.indices == rows)
    if len(hit) != n:
        raise ValueError("matrix pattern lacks diagonal entries")
    return hit


def max_abs(A):
    return float(np.abs(A.data).max()) if A.nnz else 0.0


def write_matrix_market(path, A, comment=""):
    scipy.io.mmwrite(str(path), sp.csr_matrix(A), comment=comment)


def read_matrix_market(path):
    return as_csr(scipy.io.mmread(str(path)))
