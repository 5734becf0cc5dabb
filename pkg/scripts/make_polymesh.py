"""Generate centroidal Voronoi meshes of a rectangle in the POLYMESH 2 format.

Usage: python scripts/make_polymesh.py N [N ...] [--out DIR] [--seed S] [--lloyd K]

Seeds inside the box are mirrored across its four sides, so the Voronoi
cells of the original seeds are exactly the cells clipped to the box.
"""
import argparse
import os

import numpy as np
from scipy.spatial import Voronoi

from rda.mesh import write_poly_mesh
from rda.quad import polygon_area, polygon_centroid


def voronoi_cells(seeds, box):
    (x0, x1), (y0, y1) = box
    mirrored = [seeds,
                np.column_stack([2 * x0 - seeds[:, 0], seeds[:, 1]]),
                np.column_stack([2 * x1 - seeds[:, 0], seeds[:, 1]]),
                np.column_stack([seeds[:, 0], 2 * y0 - seeds[:, 1]]),
                np.column_stack([seeds[:, 0], 2 * y1 - seeds[:, 1]])]
    vor = Voronoi(np.vstack(mirrored))
    cells = []
    for i in range(len(seeds)):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or not region:
            raise RuntimeError("unbounded cell for an interior seed")
        cells.append(vor.vertices[region])
    return cells


def lloyd(seeds, box, iterations):
    for _ in range(iterations):
        seeds = np.array([polygon_centroid(c) for c in voronoi_cells(seeds, box)])
    return seeds


def assemble(cells, box, tol=1e-9):
    """Shared vertex table with snapping to the box and merged near-duplicates."""
    (x0, x1), (y0, y1) = box
    pts = np.vstack(cells)
    for col, (lo, hi) in enumerate(box):
        pts[np.abs(pts[:, col] - lo) < tol, col] = lo
        pts[np.abs(pts[:, col] - hi) < tol, col] = hi
    key = np.round(pts / tol).astype(np.int64)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    verts = pts[first]
    polys, pos = [], 0
    for c in cells:
        ids = inverse[pos:pos + len(c)].ravel()
        pos += len(c)
        keep = [v for j, v in enumerate(ids) if v != ids[j - 1]]
        if polygon_area(verts[keep]) < 0:
            keep = keep[::-1]
        polys.append(keep)
    return verts, polys


def make_mesh(n, box=((-1.0, 1.0), (-1.0, 1.0)), seed=0, iterations=60):
    rng = np.random.default_rng(seed)
    (x0, x1), (y0, y1) = box
    seeds = np.column_stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)])
    seeds = lloyd(seeds, box, iterations)
    return assemble(voronoi_cells(seeds, box), box)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("sizes", type=int, nargs="+")
    p.add_argument("--out", default=os.path.join("src", "rda", "data"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lloyd", type=int, default=60)
    args = p.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    for n in args.sizes:
        verts, polys = make_mesh(n, seed=args.seed, iterations=args.lloyd)
        path = os.path.join(args.out, f"voronoi_{n}.poly")
        write_poly_mesh(path, verts, polys)
        print(f"{path}: {len(polys)} polygons, {len(verts)} vertices")


if __name__ == "__main__":
    main()
