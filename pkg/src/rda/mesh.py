"""Simplicial and polygonal meshes with face topology.

Structured generators split every grid square along the same diagonal (2D)
or every grid cube into the six Kuhn tetrahedra (3D).  Both patterns are
reproduced by :func:`refine_uniform`, so refining ``gen_tri_mesh(n)`` gives
the element set of ``gen_tri_mesh(2 * n)``.
"""
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .quad import fan_triangles

BOUNDARY = -1

# Bey's red refinement; children keep the Kuhn-path vertex ordering.
_TET_EDGES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
_TET_CHILDREN = [
    (0, 4, 5, 6), (4, 1, 7, 8), (5, 7, 2, 9), (6, 8, 9, 3),
    (4, 5, 6, 8), (4, 5, 7, 8), (5, 6, 8, 9), (5, 7, 8, 9),
]
_TET_FACES = [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)]


@dataclass(eq=False)
class Mesh:
    """Immutable mesh container; build through the generators or importer.

    ``elements`` is an ``(n_e, d + 1)`` array for simplicial meshes and a list
    of CCW vertex-index arrays for polygonal ones.  Faces are stored once;
    ``face_normals`` point out of ``face_left``, and boundary faces carry
    ``face_right == BOUNDARY``.
    """

    dim: int
    kind: str
    vertices: np.ndarray
    elements: object
    faces: np.ndarray = field(repr=False)
    face_left: np.ndarray = field(repr=False)
    face_right: np.ndarray = field(repr=False)
    face_normals: np.ndarray = field(repr=False)
    face_measures: np.ndarray = field(repr=False)
    face_diameters: np.ndarray = field(repr=False)
    barycenters: np.ndarray = field(repr=False)
    diameters: np.ndarray = field(repr=False)
    volumes: np.ndarray = field(repr=False)
    elem_face_ptr: np.ndarray = field(repr=False)
    elem_face_ids: np.ndarray = field(repr=False)
    subcells: np.ndarray = field(repr=False)
    subcell_owner: np.ndarray = field(repr=False)
    parent: np.ndarray = None
    spacing: float = None

    @property
    def n_elements(self):
        return len(self.barycenters)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def is_simplicial(self):
        return self.kind in ("tri", "tet")

    @property
    def interior_faces(self):
        return np.flatnonzero(self.face_right != BOUNDARY)

    @property
    def boundary_faces(self):
        return np.flatnonzero(self.face_right == BOUNDARY)

    def element_vertices(self, k):
        return np.asarray(self.elements[k])

    def element_faces(self, k):
        return self.elem_face_ids[self.elem_face_ptr[k]:self.elem_face_ptr[k + 1]]

    def vertex_incidence(self):
        """Sparse ``n_e x n_v`` element/vertex incidence (CSR, ones)."""
        from scipy.sparse import csr_matrix

        if self.is_simplicial:
            cols = np.asarray(self.elements).ravel()
            ptr = np.arange(0, len(cols) + 1, self.dim + 1)
        else:
            sizes = np.array([len(e) for e in self.elements])
            ptr = np.concatenate([[0], np.cumsum(sizes)])
            cols = np.concatenate([np.asarray(e) for e in self.elements])
        data = np.ones(len(cols))
        return csr_matrix((data, cols, ptr), shape=(self.n_elements, self.n_vertices))

    def quasi_uniformity(self):
        return float(self.diameters.max() / self.diameters.min())

    def face_points(self, ref_points, faces=None):
        """Map reference face points onto faces (default all): ``(n_f, nq, d)``."""
        V = self.vertices[self.faces if faces is None else self.faces[faces]]
        if self.dim == 2:
            s = (np.asarray(ref_points)[:, 0] + 1.0) / 2.0
            return V[:, None, 0, :] * (1 - s)[None, :, None] + V[:, None, 1, :] * s[None, :, None]
        r = np.asarray(ref_points)
        return (V[:, None, 0, :] * (1 - r[:, 0] - r[:, 1])[None, :, None]
                + V[:, None, 1, :] * r[None, :, 0, None] + V[:, None, 2, :] * r[None, :, 1, None])


def _check_box(bounds, dim):
    bounds = np.asarray(bounds, dtype=float)
    if bounds.shape != (dim, 2):
        raise ValueError(f"domain must be {dim} (lo, hi) pairs")
    if np.any(bounds[:, 1] - bounds[:, 0] <= 0):
        raise ValueError("degenerate domain: every side must have positive length")
    return bounds


def _face_topology_2d(vertices, elements):
    a_list, b_list, owner = [], [], []
    for k, el in enumerate(elements):
        el = np.asarray(el)
        a_list.append(el)
        b_list.append(np.roll(el, -1))
        owner.append(np.full(len(el), k))
    a = np.concatenate(a_list)
    b = np.concatenate(b_list)
    owner = np.concatenate(owner)
    nv = len(vertices)
    key = np.minimum(a, b).astype(np.int64) * nv + np.maximum(a, b)
    uniq, first, inv, counts = np.unique(key, return_index=True, return_inverse=True,
                                         return_counts=True)
    if np.any(counts > 2):
        raise ValueError("non-manifold mesh: a face is shared by more than two elements")
    nf = len(uniq)
    left = owner[first]
    right = np.full(nf, BOUNDARY)
    second = np.ones(len(key), dtype=bool)
    second[first] = False
    right[inv[second]] = owner[second]
    if np.any(right == left):
        raise ValueError("element lists the same edge twice")
    p, q = vertices[a[first]], vertices[b[first]]
    t = q - p
    length = np.linalg.norm(t, axis=1)
    normals = np.column_stack([t[:, 1], -t[:, 0]]) / length[:, None]
    faces = np.column_stack([a[first], b[first]])
    return faces, left, right, normals, length, length.copy(), owner, inv


def _face_topology_3d(vertices, elements, barycenters):
    el = np.asarray(elements)
    loc = np.array(_TET_FACES)
    tri = el[:, loc].reshape(-1, 3)
    owner = np.repeat(np.arange(len(el)), 4)
    s = np.sort(tri, axis=1).astype(np.int64)
    nv = len(vertices)
    key = (s[:, 0] * nv + s[:, 1]) * nv + s[:, 2]
    uniq, first, inv, counts = np.unique(key, return_index=True, return_inverse=True,
                                         return_counts=True)
    if np.any(counts > 2):
        raise ValueError("non-manifold mesh: a face is shared by more than two elements")
    nf = len(uniq)
    left = owner[first]
    right = np.full(nf, BOUNDARY)
    second = np.ones(len(key), dtype=bool)
    second[first] = False
    right[inv[second]] = owner[second]
    faces = tri[first]
    P = vertices[faces]
    cr = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
    area2 = np.linalg.norm(cr, axis=1)
    normals = cr / area2[:, None]
    centre = P.mean(axis=1)
    flip = np.einsum("fd,fd->f", centre - barycenters[left], normals) < 0
    normals[flip] *= -1
    diam = np.max(np.stack([np.linalg.norm(P[:, i] - P[:, j], axis=1)
                            for i, j in ((0, 1), (0, 2), (1, 2))]), axis=0)
    return faces, left, right, normals, 0.5 * area2, diam, owner, inv


def _max_pairwise(P):
    d = P[:, :, None, :] - P[:, None, :, :]
    return np.sqrt((d ** 2).sum(-1)).max(axis=(1, 2))


def build_mesh(vertices, elements, kind, parent=None, spacing=None):
    """Assemble topology and geometry for given vertices and element lists."""
    vertices = np.ascontiguousarray(vertices, dtype=float)
    if kind in ("tri", "tet"):
        dim = 2 if kind == "tri" else 3
        el = np.ascontiguousarray(elements, dtype=np.int64)
        if el.ndim != 2 or el.shape[1] != dim + 1:
            raise ValueError(f"{kind} elements need {dim + 1} vertices each")
        if el.min() < 0 or el.max() >= len(vertices):
            raise ValueError("element vertex index out of range")
        P = vertices[el]
        J = P[:, 1:] - P[:, :1]
        det = np.linalg.det(J)
        if dim == 2 and np.any(det < 0):
            el = el.copy()
            cw = det < 0
            el[cw, 1], el[cw, 2] = el[cw, 2].copy(), el[cw, 1].copy()
            P = vertices[el]
        vol = np.abs(det) / (2.0 if dim == 2 else 6.0)
        if np.any(vol <= 0):
            raise ValueError("degenerate simplex with zero measure")
        bary = P.mean(axis=1)
        diam = _max_pairwise(P)
        subcells = P
        sub_owner = np.arange(len(el))
        elements = el
    elif kind == "poly":
        dim = 2
        from .quad import polygon_area, polygon_centroid

        elements = [np.asarray(e, dtype=np.int64) for e in elements]
        vol, bary, diam, subs, owners = [], [], [], [], []
        for k, e in enumerate(elements):
            if len(e) < 3:
                raise ValueError(f"polygon {k} has fewer than 3 vertices")
            if e.min() < 0 or e.max() >= len(vertices):
                raise ValueError(f"polygon {k}: vertex index out of range")
            P = vertices[e]
            a = polygon_area(P)
            if a == 0.0:
                raise ValueError(f"polygon {k} has zero area")
            if a < 0:
                e = e[::-1].copy()
                elements[k] = e
                P = vertices[e]
                a = -a
            vol.append(a)
            bary.append(polygon_centroid(P))
            diam.append(_max_pairwise(P[None])[0])
            subs.append(fan_triangles(P))
            owners.append(np.full(len(e), k))
        vol, bary, diam = np.array(vol), np.array(bary), np.array(diam)
        subcells = np.concatenate(subs)
        sub_owner = np.concatenate(owners)
    else:
        raise ValueError(f"unknown mesh kind {kind!r}")

    if dim == 2:
        faces, left, right, normals, meas, fdiam, occ_owner, occ_face = _face_topology_2d(
            vertices, elements)
    else:
        faces, left, right, normals, meas, fdiam, occ_owner, occ_face = _face_topology_3d(
            vertices, elements, bary)
    order = np.argsort(occ_owner, kind="stable")
    ef_ids = occ_face[order]
    ef_ptr = np.concatenate([[0], np.cumsum(np.bincount(occ_owner, minlength=len(vol)))])
    if parent is not None:
        parent = np.asarray(parent, dtype=np.int64)
    return Mesh(dim=dim, kind=kind, vertices=vertices, elements=elements, faces=faces,
                face_left=left, face_right=right, face_normals=normals, face_measures=meas,
                face_diameters=fdiam, barycenters=bary, diameters=diam, volumes=vol,
                elem_face_ptr=ef_ptr, elem_face_ids=ef_ids, subcells=subcells,
                subcell_owner=sub_owner, parent=parent, spacing=spacing)


def gen_tri_mesh(domain, n, diagonal="down"):
    """Structured triangulation of a rectangle, ``n`` squares per axis.

    ``domain`` is ``((x0, x1), (y0, y1))``.  Every square is cut along the
    same diagonal: ``"down"`` joins upper-left to lower-right corners,
    ``"up"`` joins lower-left to upper-right.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if diagonal not in ("down", "up"):
        raise ValueError("diagonal must be 'down' or 'up'")
    b = _check_box(domain, 2)
    x = np.linspace(b[0, 0], b[0, 1], n + 1)
    y = np.linspace(b[1, 0], b[1, 1], n + 1)
    X, Y = np.meshgrid(x, y, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    v00 = idx[:-1, :-1].ravel()
    v10 = idx[1:, :-1].ravel()
    v11 = idx[1:, 1:].ravel()
    v01 = idx[:-1, 1:].ravel()
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    if diagonal == "up":
        tris[0::2] = np.column_stack([v00, v10, v11])
        tris[1::2] = np.column_stack([v00, v11, v01])
    else:
        tris[0::2] = np.column_stack([v00, v10, v01])
        tris[1::2] = np.column_stack([v10, v11, v01])
    spacing = (b[0, 1] - b[0, 0]) / n
    return build_mesh(verts, tris, "tri", spacing=spacing)


def gen_tet_mesh(domain, n):
    """Kuhn triangulation of a box: six tetrahedra per cube, ``6 n^3`` total."""
    if n < 1:
        raise ValueError("n must be >= 1")
    b = _check_box(domain, 3)
    axes = [np.linspace(b[i, 0], b[i, 1], n + 1) for i in range(3)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    idx = np.arange((n + 1) ** 3).reshape(n + 1, n + 1, n + 1)
    base = np.stack(np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij"),
                    axis=-1).reshape(-1, 3)
    tets = []
    for perm in permutations(range(3)):
        path = [base.copy()]
        cur = base.copy()
        for ax in perm:
            cur = cur.copy()
            cur[:, ax] += 1
            path.append(cur)
        tets.append(np.column_stack([idx[p[:, 0], p[:, 1], p[:, 2]] for p in path]))
    tets = np.stack(tets, axis=1).reshape(-1, 4)
    spacing = (b[0, 1] - b[0, 0]) / n
    return build_mesh(verts, tets, "tet", spacing=spacing)


def refine_uniform(mesh):
    """Red refinement: 4 children per triangle, 8 per tetrahedron."""
    if not mesh.is_simplicial:
        raise ValueError("uniform refinement needs a simplicial mesh; polygonal meshes are not nested")
    el = np.asarray(mesh.elements)
    nv = mesh.n_vertices
    if mesh.dim == 2:
        pairs = [(0, 1), (1, 2), (2, 0)]
    else:
        pairs = _TET_EDGES
    a = np.stack([el[:, i] for i, _ in pairs], axis=1)
    b = np.stack([el[:, j] for _, j in pairs], axis=1)
    key = np.minimum(a, b).astype(np.int64) * nv + np.maximum(a, b)
    uniq, inv = np.unique(key.ravel(), return_inverse=True)
    lo, hi = uniq // nv, uniq % nv
    mids = 0.5 * (mesh.vertices[lo] + mesh.vertices[hi])
    verts = np.vstack([mesh.vertices, mids])
    mid_id = (nv + inv).reshape(key.shape)
    local = np.concatenate([el, mid_id], axis=1)
    if mesh.dim == 2:
        # local: 0,1,2 corners; 3 = m01, 4 = m12, 5 = m20
        children = [(0, 3, 5), (3, 1, 4), (5, 4, 2), (4, 5, 3)]
        kind = "tri"
    else:
        children = _TET_CHILDREN
        kind = "tet"
    kids = np.stack([local[:, list(c)] for c in children], axis=1).reshape(-1, mesh.dim + 1)
    parent = np.repeat(np.arange(len(el)), len(children))
    spacing = None if mesh.spacing is None else mesh.spacing / 2
    return build_mesh(verts, kids, kind, parent=parent, spacing=spacing)


def structured_hierarchy(domain, n, dim=2, coarsest=2):
    """Nested meshes ending at ``n`` subdivisions per axis, coarsest first.

    The coarsest level has ``n / 2^k`` subdivisions for the largest ``k`` that
    keeps it at least ``coarsest`` (or odd).
    """
    n0, levels = n, 0
    while n0 % 2 == 0 and n0 // 2 >= coarsest:
        n0 //= 2
        levels += 1
    gen = gen_tri_mesh if dim == 2 else gen_tet_mesh
    meshes = [gen(domain, n0)]
    for _ in range(levels):
        meshes.append(refine_uniform(meshes[-1]))
    return meshes


def read_poly_mesh(path):
    """Read the ``POLYMESH 2`` text format (0-based CCW vertex indices)."""
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    if len(tokens) < 2 or tokens[0] != "POLYMESH" or tokens[1] != "2":
        raise ValueError(f"{path}: bad header, expected 'POLYMESH 2'")
    try:
        pos = 2
        nv, ne = int(tokens[pos]), int(tokens[pos + 1])
        pos += 2
        coords = np.array([float(t) for t in tokens[pos:pos + 2 * nv]]).reshape(nv, 2)
        pos += 2 * nv
        if coords.shape != (nv, 2):
            raise ValueError
        polys = []
        for _ in range(ne):
            k = int(tokens[pos])
            polys.append(np.array([int(t) for t in tokens[pos + 1:pos + 1 + k]], dtype=np.int64))
            if len(polys[-1]) != k:
                raise ValueError
            pos += 1 + k
    except (ValueError, IndexError):
        raise ValueError(f"{path}: truncated or malformed polygon mesh file") from None
    return coords, polys


def import_poly_mesh(path):
    """Import a polygonal mesh file; self-intersection is not checked."""
    coords, polys = read_poly_mesh(path)
    return build_mesh(coords, polys, "poly")


def write_poly_mesh(path, vertices, polygons):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("POLYMESH 2\n")
        fh.write(f"{len(vertices)} {len(polygons)}\n")
        for x, y in vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for p in polygons:
            fh.write(" ".join([str(len(p))] + [str(int(i)) for i in p]) + "\n")


def bundled_mesh_path(name):
    """Path of a polygonal mesh shipped in ``rda/data`` (e.g. ``"voronoi_64"``)."""
    import os

    fname = name if name.endswith(".poly") else name + ".poly"
    path = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", fname)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no bundled mesh named {name!r}")
    return path
