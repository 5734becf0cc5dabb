"""Interior penalty forms on broken polynomial spaces and their RDA composition.

Matrices are assembled in the modal basis of :mod:`rda.basis` (one block of
``nb`` functions per element) and composed with a reconstruction operator
``R`` as ``R^T A R``.  Rows index test functions, columns trial functions.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import dim_poly, monomial_grads, monomials
from .quad import face_rule, map_simplex, simplex_rule

CHUNK = 4096


@dataclass
class EllipticProblem:
    """``-div(A grad u) = f`` with ``u = g`` on the boundary.

    ``A`` is a constant ``(d, d)`` array or a callable mapping points
    ``(..., d)`` to ``(..., d, d)``; ``f``, ``g``, ``u_exact`` map points to
    values and ``grad_exact`` to ``(..., d)``.
    """

    dim: int
    A: object
    f: object
    g: object
    u_exact: object = None
    grad_exact: object = None
    theta: int = -1
    mu: float = 15.0
    name: str = ""
    domain: tuple = None

    def __post_init__(self):
        if self.theta not in (-1, 1):
            raise ValueError("theta must be -1 (symmetric) or +1 (nonsymmetric)")
        if not self.mu > 0:
            raise ValueError("penalty mu must be positive")
        if not callable(self.A):
            A = np.asarray(self.A, dtype=float)
            if A.shape != (self.dim, self.dim):
                raise ValueError("A must be a d x d matrix")
            _check_spd(A[None])
            self.A = A

    @property
    def constant_coefficient(self):
        return not callable(self.A)

    def coefficient(self, x):
        x = np.asarray(x, dtype=float)
        if callable(self.A):
            return np.asarray(self.A(x), dtype=float)
        return np.broadcast_to(self.A, x.shape[:-1] + (self.dim, self.dim))

    def check_coefficient(self, points):
        _check_spd(self.coefficient(points).reshape(-1, self.dim, self.dim))

    def with_theta(self, theta):
        from dataclasses import replace

        return replace(self, theta=theta)


def _check_spd(A):
    if not np.allclose(A, np.swapaxes(A, -1, -2), rtol=1e-12, atol=1e-14):
        raise ValueError("coefficient A must be symmetric")
    if np.linalg.eigvalsh(A).min() <= 0:
        raise ValueError("coefficient A must be positive definite")


@dataclass
class BrokenSpace:
    mesh: object
    m: int

    @property
    def nb(self):
        return dim_poly(self.m, self.mesh.dim)

    @property
    def n_dof(self):
        return self.mesh.n_elements * self.nb


@dataclass
class AssembledSystem:
    A_mat: sp.csr_matrix
    b: np.ndarray
    M: sp.csr_matrix = None
    tag: str = "DG"
    parts: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.A_mat.shape[0]


def _chunks(n, size=CHUNK):
    for s in range(0, n, size):
        yield slice(s, min(s + size, n))


class _BlockPattern:
    """Block sparsity of element/face coupling: diagonal plus face neighbours."""

    def __init__(self, mesh):
        n = mesh.n_elements
        fi = mesh.interior_faces
        L, R = mesh.face_left[fi], mesh.face_right[fi]
        rows = np.concatenate([np.arange(n), L, R])
        cols = np.concatenate([np.arange(n), R, L])
        key = rows.astype(np.int64) * n + cols
        uniq, inv = np.unique(key, return_inverse=True)
        self.n = n
        self.rows, self.cols = uniq // n, uniq % n
        self.indptr = np.concatenate([[0], np.cumsum(np.bincount(self.rows, minlength=n))])
        self.diag_id = inv[:n]
        self.lr_id = inv[n:n + len(fi)]
        self.rl_id = inv[n + len(fi):]
        mirror_key = self.cols * n + self.rows
        self.mirror = np.searchsorted(uniq, mirror_key)

    def zeros(self, nb):
        return np.zeros((len(self.rows), nb, nb))

    def to_csr(self, data):
        nb = data.shape[1]
        B = sp.bsr_matrix((data, self.cols, self.indptr), shape=(self.n * nb, self.n * nb))
        return B.tocsr()

    def transpose_data(self, data):
        return np.ascontiguousarray(data[self.mirror].transpose(0, 2, 1))


def _subcell_batches(mesh, degree):
    rule = simplex_rule(mesh.dim, degree)
    owner = mesh.subcell_owner
    for sl in _chunks(len(owner)):
        pts, w = map_simplex(rule, mesh.subcells[sl])
        yield owner[sl], pts, w


def _face_geometry(mesh, faces, degree):
    rule = face_rule(mesh.dim, degree)
    pts = mesh.face_points(rule.points, faces)
    ref_measure = 2.0 if mesh.dim == 2 else 0.5
    w = mesh.face_measures[faces][:, None] * (rule.weights / ref_measure)[None, :]
    return pts, w


def _side_eval(mesh, k, pts, m):
    c = mesh.barycenters[k][:, None, :]
    h = mesh.diameters[k][:, None]
    return monomials(pts, c, h, m), monomial_grads(pts, c, h, m)


def _flux(prob, pts, grads, normals):
    # (A grad phi) . n  with A symmetric -> grad phi . (A n)
    if prob.constant_coefficient:
        An = np.broadcast_to((normals @ prob.A)[:, None, :], pts.shape)
    else:
        An = np.einsum("fqde,fe->fqd", prob.coefficient(pts), normals)
    return np.einsum("fqid,fqd->fqi", grads, An)


def _volume_blocks(space, prob, degree):
    mesh, m, nb = space.mesh, space.m, space.nb
    out = np.zeros((mesh.n_elements, nb, nb))
    for owner, pts, w in _subcell_batches(mesh, degree):
        G = monomial_grads(pts, mesh.barycenters[owner][:, None, :],
                           mesh.diameters[owner][:, None], m)
        AG = np.einsum("sqde,sqje->sqjd", prob.coefficient(pts), G)
        S = np.einsum("sq,sqid,sqjd->sij", w, G, AG)
        np.add.at(out, owner, S)
    return out


def mass_blocks(space, degree=None):
    mesh, m, nb = space.mesh, space.m, space.nb
    degree = 2 * m if degree is None else degree
    out = np.zeros((mesh.n_elements, nb, nb))
    for owner, pts, w in _subcell_batches(mesh, degree):
        P = monomials(pts, mesh.barycenters[owner][:, None, :], mesh.diameters[owner][:, None], m)
        np.add.at(out, owner, np.einsum("sq,sqi,sqj->sij", w, P, P))
    return out


def _face_blocks(space, prob, degree, pattern, split):
    """Accumulate penalty and consistency face terms into block data."""
    mesh, m, nb = space.mesh, space.m, space.nb
    mu = prob.mu
    sym = pattern.zeros(nb)
    cons = pattern.zeros(nb) if split else None
    full = sym if not split else None
    theta = prob.theta
    fi = mesh.interior_faces
    for sl in _chunks(len(fi)):
        f = fi[sl]
        pts, w = _face_geometry(mesh, f, degree)
        n = mesh.face_normals[f]
        L, R = mesh.face_left[f], mesh.face_right[f]
        pL, gL = _side_eval(mesh, L, pts, m)
        pR, gR = _side_eval(mesh, R, pts, m)
        jv = np.concatenate([pL, -pR], axis=2)
        fl = 0.5 * np.concatenate([_flux(prob, pts, gL, n), _flux(prob, pts, gR, n)], axis=2)
        pen = np.einsum("fq,fqi,fqj->fij", w * (mu / mesh.face_diameters[f])[:, None], jv, jv)
        con = np.einsum("fq,fqi,fqj->fij", w, jv, fl)
        if split:
            _scatter_face(sym, pattern, L, R, sl, pen, nb)
            _scatter_face(cons, pattern, L, R, sl, con, nb)
        else:
            loc = pen - con + theta * con.transpose(0, 2, 1)
            _scatter_face(full, pattern, L, R, sl, loc, nb)
    fb = mesh.boundary_faces
    for sl in _chunks(len(fb)):
        f = fb[sl]
        pts, w = _face_geometry(mesh, f, degree)
        n = mesh.face_normals[f]
        L = mesh.face_left[f]
        pL, gL = _side_eval(mesh, L, pts, m)
        fl = _flux(prob, pts, gL, n)
        pen = np.einsum("fq,fqi,fqj->fij", w * (mu / mesh.face_diameters[f])[:, None], pL, pL)
        con = np.einsum("fq,fqi,fqj->fij", w, pL, fl)
        ids = pattern.diag_id[L]
        if split:
            np.add.at(sym, ids, pen)
            np.add.at(cons, ids, con)
        else:
            np.add.at(full, ids, pen - con + theta * con.transpose(0, 2, 1))
    return sym, cons


def _scatter_face(data, pattern, L, R, sl, loc, nb):
    np.add.at(data, pattern.diag_id[L], loc[:, :nb, :nb])
    np.add.at(data, pattern.diag_id[R], loc[:, nb:, nb:])
    np.add.at(data, pattern.lr_id[sl], loc[:, :nb, nb:])
    np.add.at(data, pattern.rl_id[sl], loc[:, nb:, :nb])


def assemble_rhs(space, prob):
    """Load vector ``l_{h,theta}`` in the modal basis, shape ``(n_e * nb,)``."""
    mesh, m, nb = space.mesh, space.m, space.nb
    deg = 2 * m + 2
    b = np.zeros((mesh.n_elements, nb))
    for owner, pts, w in _subcell_batches(mesh, deg):
        P = monomials(pts, mesh.barycenters[owner][:, None, :], mesh.diameters[owner][:, None], m)
        np.add.at(b, owner, np.einsum("sq,sq,sqi->si", w, prob.f(pts), P))
    fb = mesh.boundary_faces
    for sl in _chunks(len(fb)):
        f = fb[sl]
        pts, w = _face_geometry(mesh, f, deg)
        L = mesh.face_left[f]
        pL, gL = _side_eval(mesh, L, pts, m)
        fl = _flux(prob, pts, gL, mesh.face_normals[f])
        gw = w * prob.g(pts)
        contrib = prob.theta * np.einsum("fq,fqi->fi", gw, fl)
        contrib += np.einsum("fq,fqi->fi", gw * (prob.mu / mesh.face_diameters[f])[:, None], pL)
        np.add.at(b, L, contrib)
    return b.ravel()


def assemble_dg(space, prob, split=False, with_mass=False):
    """Interior penalty system on the broken space ``V_h^m``.

    With ``split=True`` the result also carries ``parts["sym"]`` (volume +
    penalty) and ``parts["cons"]`` (``int {A grad u} . [v]``), so that
    ``A = sym - cons + theta * cons^T``.
    """
    if space.m < 1:
        raise ValueError("assemble_dg needs m >= 1; use assemble_a0 for constants")
    mesh, m, nb = space.mesh, space.m, space.nb
    vol_deg = 2 * m if prob.constant_coefficient else 2 * m + 2
    face_deg = 2 * m + 1 if prob.constant_coefficient else 2 * m + 2
    pattern = _BlockPattern(mesh)
    vol = _volume_blocks(space, prob, vol_deg)
    sym, cons = _face_blocks(space, prob, face_deg, pattern, split)
    sym[pattern.diag_id] += vol
    del vol
    parts = {}
    if split:
        A = sym - cons + prob.theta * pattern.transpose_data(cons)
        parts["sym"] = pattern.to_csr(sym)
        parts["cons"] = pattern.to_csr(cons)
        A_mat = pattern.to_csr(A)
    else:
        A_mat = pattern.to_csr(sym)
    del sym, cons
    M = assemble_mass(space) if with_mass else None
    return AssembledSystem(A_mat=A_mat, b=assemble_rhs(space, prob), M=M,
                           tag=f"DG({m})", parts=parts)


def assemble_mass(space):
    """Block-diagonal modal mass matrix (exact for polynomial integrands)."""
    blocks = mass_blocks(space)
    return sp.block_diag(list(blocks), format="csr") if len(blocks) < 64 else _blockdiag(blocks)


def _blockdiag(blocks):
    n, nb, _ = blocks.shape
    indptr = np.arange(n + 1)
    return sp.bsr_matrix((blocks, np.arange(n), indptr), shape=(n * nb, n * nb)).tocsr()


def assemble_a0(mesh):
    """Jump-penalty matrix on piecewise constants, ``sum_e |e| / h_e [v][w]``."""
    n = mesh.n_elements
    w = mesh.face_measures / mesh.face_diameters
    L, R = mesh.face_left, mesh.face_right
    inner = R >= 0
    rows = np.concatenate([L, R[inner], L[inner], R[inner]])
    cols = np.concatenate([L, R[inner], R[inner], L[inner]])
    vals = np.concatenate([w, w[inner], -w[inner], -w[inner]])
    A0 = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A0.sum_duplicates()
    A0.sort_indices()
    return AssembledSystem(A_mat=A0, b=np.zeros(n), tag="PWC")


def galerkin_product(R, A):
    """``R^T A R`` for sparse ``R`` and ``A``."""
    RT = R.T.tocsr()
    out = (RT @ (A @ R)).tocsr()
    out.sort_indices()
    return out


def compose_rda(dg, op):
    """Restrict a broken-space system to the reconstructed space."""
    R = op.R if hasattr(op, "R") else op
    if R.shape[0] != dg.A_mat.shape[0]:
        raise ValueError(f"shape mismatch: R has {R.shape[0]} rows, system has {dg.A_mat.shape[0]}")
    RT = R.T.tocsr()
    A = galerkin_product(R, dg.A_mat)
    parts = {k: galerkin_product(R, v) for k, v in dg.parts.items()}
    M = galerkin_product(R, dg.M) if dg.M is not None else None
    m = getattr(op, "m", "?")
    return AssembledSystem(A_mat=A, b=RT @ dg.b, M=M, tag=f"RDA({m})", parts=parts)


def assemble_rda(mesh, op, prob, split=False, with_mass=False):
    dg = assemble_dg(BrokenSpace(mesh, op.m), prob, split=split, with_mass=with_mass)
    out = compose_rda(dg, op)
    del dg
    return out


def interpolant(mesh, fn):
    """Element values ``fn(x_K)``: the dof vector whose reconstruction samples ``fn``."""
    return np.asarray(fn(mesh.barycenters), dtype=float)


def error_norms(space, op, dofs, prob):
    """L2, energy and tilde-energy errors of a discrete solution.

    ``op`` is a reconstruction operator (``dofs`` are element values) or
    ``None`` (``dofs`` are modal coefficients of the broken space).
    """
    if prob.u_exact is None or prob.grad_exact is None:
        raise ValueError("error norms need u_exact and grad_exact")
    mesh, m = space.mesh, space.m
    C = op.coefficients(dofs) if op is not None else np.asarray(dofs).reshape(-1, space.nb)
    deg = 2 * m + 2
    l2 = h1 = 0.0
    for owner, pts, w in _subcell_batches(mesh, deg):
        c = mesh.barycenters[owner][:, None, :]
        h = mesh.diameters[owner][:, None]
        uh = np.einsum("sqi,si->sq", monomials(pts, c, h, m), C[owner])
        guh = np.einsum("sqid,si->sqd", monomial_grads(pts, c, h, m), C[owner])
        l2 += np.sum(w * (prob.u_exact(pts) - uh) ** 2)
        h1 += np.sum(w * ((prob.grad_exact(pts) - guh) ** 2).sum(-1))
    jump = avg = 0.0
    for faces, inner in ((mesh.interior_faces, True), (mesh.boundary_faces, False)):
        for sl in _chunks(len(faces)):
            f = faces[sl]
            pts, w = _face_geometry(mesh, f, deg)
            L = mesh.face_left[f]
            pL, gL = _side_eval(mesh, L, pts, m)
            uL = np.einsum("fqi,fi->fq", pL, C[L])
            guL = np.einsum("fqid,fi->fqd", gL, C[L])
            he = mesh.face_diameters[f][:, None]
            if inner:
                R = mesh.face_right[f]
                pR, gR = _side_eval(mesh, R, pts, m)
                uR = np.einsum("fqi,fi->fq", pR, C[R])
                guR = np.einsum("fqid,fi->fqd", gR, C[R])
                jmp = uL - uR
                gav = prob.grad_exact(pts) - 0.5 * (guL + guR)
            else:
                jmp = prob.u_exact(pts) - uL
                gav = prob.grad_exact(pts) - guL
            jump += np.sum(w / he * jmp ** 2)
            avg += np.sum(w * he * (gav ** 2).sum(-1))
    energy = np.sqrt(h1 + jump)
    return {"l2": float(np.sqrt(l2)), "energy": float(energy),
            "energy_tilde": float(np.sqrt(h1 + jump + avg))}
