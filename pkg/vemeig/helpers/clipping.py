# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

from typing import List, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree


def _clip_half_plane(polygon: List[Tuple[float, float]], axis: int, value: float, keep_below: bool):
    def inside(p):
        return p[axis] <= value if keep_below else p[axis] >= value

    def crossing(p, q):
        t = (value - p[axis])/(q[axis] - p[axis])
        other = 1 - axis
        point = [0.0, 0.0]
        point[axis] = value
        point[other] = p[other] + t*(q[other] - p[other])
        return tuple(point)

    clipped = []
    for i, current in enumerate(polygon):
        previous = polygon[i - 1]
        if inside(current):
            if not inside(previous):
                clipped.append(crossing(previous, current))
            clipped.append(current)
        elif inside(previous):
            clipped.append(crossing(previous, current))
    return clipped


def clip_to_box(polygon, lower=(0.0, 0.0), upper=(1.0, 1.0)) -> np.ndarray:
    """
    Sutherland-Hodgman clipping of a polygon against an axis aligned box.

    Intersection points get the clip coordinate assigned exactly, so vertices
    created on the box sides lie on them without roundoff. Consecutive
    duplicates are removed; an empty array is returned when nothing remains.
    """
    clipped = [tuple(map(float, p)) for p in np.asarray(polygon, dtype=float)]
    for axis in (0, 1):
        if not clipped:
            break
        clipped = _clip_half_plane(clipped, axis, float(lower[axis]), keep_below=False)
        if clipped:
            clipped = _clip_half_plane(clipped, axis, float(upper[axis]), keep_below=True)
    deduplicated = [p for i, p in enumerate(clipped) if p != clipped[i - 1]] if len(clipped) > 1 else clipped
    return np.array(deduplicated, dtype=float).reshape(-1, 2)


def snap_to_box(points: np.ndarray, tol: float, lower=(0.0, 0.0), upper=(1.0, 1.0)) -> np.ndarray:
    """ Move coordinates within tol of a box side exactly onto it """
    points = np.array(points, dtype=float)
    for axis in (0, 1):
        points[np.abs(points[:, axis] - lower[axis]) <= tol, axis] = lower[axis]
        points[np.abs(points[:, axis] - upper[axis]) <= tol, axis] = upper[axis]
    return points


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            # keep the lowest index as representative so merging is order independent
            self.parent[max(ri, rj)] = min(ri, rj)


def merge_polygons(polygons: Sequence[np.ndarray], merge_tol: float, short_edge_rtol: float):
    """
    Build shared vertex/cell connectivity from independent polygons.

    Points closer than merge_tol are identified, and so are the end points of
    edges shorter than short_edge_rtol times the polygon diameter. Returns the
    vertex array, the cells as index lists and the number of collapsed edges.
    """
    points = np.vstack([np.asarray(p, dtype=float) for p in polygons])
    offsets = np.cumsum([0] + [len(p) for p in polygons])
    uf = _UnionFind(len(points))
    for i, j in sorted(cKDTree(points).query_pairs(merge_tol)):
        uf.union(i, j)

    collapsed = 0
    for c, poly in enumerate(polygons):
        poly = np.asarray(poly, dtype=float)
        diff = poly[:, None, :] - poly[None, :, :]
        h = np.sqrt((diff**2).sum(axis=-1)).max()
        lengths = np.hypot(*(np.roll(poly, -1, axis=0) - poly).T)
        for i in np.flatnonzero(lengths < short_edge_rtol*h):
            a, b = offsets[c] + i, offsets[c] + (i + 1) % len(poly)
            if uf.find(a) != uf.find(b):
                collapsed += 1
            uf.union(a, b)

    roots = np.array([uf.find(i) for i in range(len(points))])
    unique_roots, new_index = np.unique(roots, return_inverse=True)
    vertices = points[unique_roots]

    cells = []
    for c in range(len(polygons)):
        ids = new_index[offsets[c]:offsets[c + 1]].tolist()
        cell = [v for i, v in enumerate(ids) if v != ids[i - 1]] if len(ids) > 1 else ids
        cells.append(cell)
    return vertices, cells, collapsed
