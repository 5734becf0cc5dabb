"""Element patches grown by vertex adjacency, and the unisolvence check."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .basis import dim_poly, monomials

# patch-size thresholds per (dim, mesh kind) for degrees 1..4
THRESHOLDS = {
    (2, "tri"): {1: 8, 2: 10, 3: 15, 4: 21},
    (2, "poly"): {1: 8, 2: 15, 3: 21, 4: 27},
    (3, "tet"): {1: 10, 2: 19, 3: 38},
}
_KIND_ALIASES = {"triangular": "tri", "polygonal": "poly", "tetrahedral": "tet"}


@dataclass
class ElementPatch:
    owner: int
    members: np.ndarray
    collocation: np.ndarray
    depth: int
    exhausted: bool = False
    rank_ok: bool = None

    def __len__(self):
        return len(self.members)


@dataclass
class PatchSet:
    """All patches of a mesh in flat (CSR-like) storage."""

    threshold: int
    ptr: np.ndarray
    members: np.ndarray
    depth: np.ndarray
    exhausted: np.ndarray

    def __len__(self):
        return len(self.depth)

    def sizes(self):
        return np.diff(self.ptr)

    def members_of(self, k):
        return self.members[self.ptr[k]:self.ptr[k + 1]]

    def patch(self, mesh, k):
        mem = self.members_of(k)
        return ElementPatch(owner=int(k), members=mem.copy(), collocation=mesh.barycenters[mem],
                            depth=int(self.depth[k]), exhausted=bool(self.exhausted[k]))


def default_threshold(m, dim, kind):
    kind = _KIND_ALIASES.get(kind, kind)
    try:
        return THRESHOLDS[(dim, kind)][m]
    except KeyError:
        raise ValueError(
            f"no tabulated threshold for m={m}, dim={dim}, kind={kind}; pass one explicitly"
        ) from None


def vertex_adjacency(mesh):
    """Boolean element graph: K ~ K' when their closures share a vertex."""
    B = mesh.vertex_incidence()
    A = (B @ B.T).tocsr()
    A.data[:] = 1.0
    A.sort_indices()
    return A


def build_patch(mesh, k, threshold, adjacency=None):
    """Grow the patch of element ``k`` ring by ring until it has ``threshold`` members."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    adj = vertex_adjacency(mesh) if adjacency is None else adjacency
    members = [int(k)]
    seen = {int(k)}
    ring = [int(k)]
    depth, exhausted = 0, False
    while len(members) < threshold:
        nxt = set()
        for e in ring:
            nxt.update(adj.indices[adj.indptr[e]:adj.indptr[e + 1]].tolist())
        nxt -= seen
        if not nxt:
            exhausted = True
            break
        ring = sorted(nxt)
        members.extend(ring)
        seen.update(ring)
        depth += 1
    mem = np.array(members, dtype=np.int64)
    return ElementPatch(owner=int(k), members=mem, collocation=mesh.barycenters[mem],
                        depth=depth, exhausted=exhausted)


def build_patches(mesh, threshold):
    """Vectorised :func:`build_patch` over all elements (same member order)."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    n = mesh.n_elements
    adj = vertex_adjacency(mesh)
    P = sp.identity(n, format="csr")
    counts = np.ones(n, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    exhausted = np.zeros(n, dtype=bool)
    done = counts >= threshold
    ring_acc = P.copy()  # sum over t of reach patterns
    t = 0
    while not done.all():
        t += 1
        Pn = (P @ adj).tocsr()
        Pn.data[:] = 1.0
        new_counts = np.diff(Pn.indptr)
        stalled = (~done) & (new_counts == counts)
        exhausted |= stalled
        done |= stalled
        grow = ~done
        depth[grow] = t
        done |= grow & (new_counts >= threshold)
        counts = np.where(grow, new_counts, counts)
        ring_acc = ring_acc + Pn
        P = Pn
    T = t
    R = ring_acc.tocoo()
    ring = (T + 1 - np.rint(R.data)).astype(np.int64)
    rows, cols = R.row.astype(np.int64), R.col.astype(np.int64)
    keep = ring <= depth[rows]
    rows, cols, ring = rows[keep], cols[keep], ring[keep]
    order = np.lexsort((cols, ring, rows))
    members = cols[order]
    ptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n))])
    return PatchSet(threshold=threshold, ptr=ptr, members=members, depth=depth,
                    exhausted=exhausted)


def vandermonde(mesh, owner, points, m):
    return monomials(points, mesh.barycenters[owner], mesh.diameters[owner], m)


def check_unisolvence(patch, m, mesh):
    """Column rank of the collocation Vandermonde via pivoted QR.

    Returns ``(rank, rank_ok)``; ``rank_ok`` also sets ``patch.rank_ok``.
    """
    V = vandermonde(mesh, patch.owner, patch.collocation, m)
    nb = dim_poly(m, mesh.dim)
    if V.shape[0] == 0:
        return 0, False
    _, Rm, _ = scipy.linalg.qr(V, mode="economic", pivoting=True)
    tol = 1e-10 * np.linalg.norm(V, axis=0).max()
    rank = int(np.sum(np.abs(np.diag(Rm)) > tol))
    patch.rank_ok = rank == nb
    return rank, patch.rank_ok
