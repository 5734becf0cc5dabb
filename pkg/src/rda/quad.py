"""Quadrature rules on simplices, faces and polygons.

Reference domains: the unit interval ``[-1, 1]`` for segment faces, the unit
triangle ``{x, y >= 0, x + y <= 1}`` and the unit tetrahedron
``{x, y, z >= 0, x + y + z <= 1}``.  Low degrees use small symmetric tables;
higher degrees use collapsed (Duffy) tensor Gauss-Jacobi products, which have
positive weights and interior points for every degree.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = {2: 10, 3: 8}
MAX_FACE_DEGREE = 21


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)

    def integrate(self, fn):
        return float(np.dot(self.weights, fn(self.points)))


def _gauss_jacobi01(n, alpha):
    # nodes on [0, 1] for the weight (1 - t)^alpha
    x, w = roots_jacobi(n, alpha, 0.0)
    return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1)


def _collapsed_triangle(degree):
    n = degree // 2 + 1
    s, ws = _gauss_jacobi01(n, 1.0)
    t, wt = _gauss_jacobi01(n, 0.0)
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(ws, wt)
    # x = (1 - s) t, y = s; the Jacobian (1 - s) is absorbed in the s-weight
    pts = np.column_stack([((1 - S) * T).ravel(), S.ravel()])
    return pts, W.ravel()


def _collapsed_tet(degree):
    n = degree // 2 + 1
    r, wr = _gauss_jacobi01(n, 2.0)
    s, ws = _gauss_jacobi01(n, 1.0)
    t, wt = _gauss_jacobi01(n, 0.0)
    R, S, T = np.meshgrid(r, s, t, indexing="ij")
    W = wr[:, None, None] * ws[None, :, None] * wt[None, None, :]
    z = R
    y = (1 - R) * S
    x = (1 - R) * (1 - S) * T
    pts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    return pts, W.ravel()


@lru_cache(maxsize=None)
def _simplex_rule(dim, degree):
    if dim == 2:
        if degree <= 1:
            return np.array([[1 / 3, 1 / 3]]), np.array([0.5]), 1
        if degree == 2:
            pts = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
            return pts, np.full(3, 1 / 6), 2
        pts, w = _collapsed_triangle(degree)
        return pts, w, degree
    if degree <= 1:
        return np.array([[0.25, 0.25, 0.25]]), np.array([1 / 6]), 1
    if degree == 2:
        a, b = 0.5854101966249685, 0.1381966011250105
        pts = np.array([[b, b, b], [a, b, b], [b, a, b], [b, b, a]])
        return pts, np.full(4, 1 / 24), 2
    pts, w = _collapsed_tet(degree)
    return pts, w, degree


def simplex_rule(dim, degree):
    """Rule on the unit reference simplex exact for total degree ``degree``."""
    if dim not in MAX_DEGREE:
        raise ValueError(f"unsupported dimension {dim}")
    if degree < 0 or degree > MAX_DEGREE[dim]:
        raise ValueError(f"degree {degree} unsupported for dim {dim} (max {MAX_DEGREE[dim]})")
    pts, w, deg = _simplex_rule(dim, max(degree, 1))
    return QuadratureRule(pts.copy(), w.copy(), max(deg, degree))


def face_rule(dim, degree):
    """Rule on the reference face of a ``dim``-dimensional element.

    Segment faces (``dim == 2``) use Gauss-Legendre on ``[-1, 1]``; triangle
    faces use :func:`simplex_rule`.
    """
    if dim == 2:
        if degree < 0 or degree > MAX_FACE_DEGREE:
            raise ValueError(f"face degree {degree} unsupported")
        n = max(degree, 1) // 2 + 1
        x, w = roots_legendre(n)
        return QuadratureRule(x[:, None], w, 2 * n - 1)
    if dim == 3:
        return simplex_rule(2, degree)
    raise ValueError(f"unsupported dimension {dim}")


def map_simplex(rule, corners):
    """Map a reference simplex rule onto simplices.

    ``corners`` has shape ``(n, d + 1, d)``.  Returns physical points of shape
    ``(n, nq, d)`` and weights ``(n, nq)``.
    """
    corners = np.asarray(corners, dtype=float)
    v0 = corners[:, 0, :]
    J = corners[:, 1:, :] - v0[:, None, :]  # rows are edge vectors
    pts = v0[:, None, :] + np.einsum("qi,nid->nqd", rule.points, J)
    det = np.abs(np.linalg.det(J))
    return pts, det[:, None] * rule.weights[None, :]


def fan_triangles(polygon):
    """Split a polygon into triangles fanned from its area centroid."""
    P = np.asarray(polygon, dtype=float)
    c = polygon_centroid(P)
    nxt = np.roll(P, -1, axis=0)
    return np.stack([np.broadcast_to(c, P.shape), P, nxt], axis=1)


def polygon_area(P):
    x, y = P[:, 0], P[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(P):
    P = np.asarray(P, dtype=float)
    x, y = P[:, 0], P[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    if a == 0.0:
        raise ValueError("degenerate polygon with zero area")
    cx = ((x + xn) * cross).sum() / (6 * a)
    cy = ((y + yn) * cross).sum() / (6 * a)
    return np.array([cx, cy])


def polygon_rule(polygon, degree):
    """Physical quadrature on a simple CCW polygon via a centroid fan."""
    tris = fan_triangles(polygon)
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if np.any(np.abs(area) <= 1e-14 * max(1.0, np.abs(area).max())):
        raise ValueError("degenerate triangle in polygon fan")
    ref = simplex_rule(2, degree)
    pts, w = map_simplex(ref, tris)
    return QuadratureRule(pts.reshape(-1, 2), w.ravel(), ref.degree)
