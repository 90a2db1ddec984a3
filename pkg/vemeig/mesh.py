# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

"""
Generators for the five polygonal mesh families on the unit square.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from scipy.spatial import Voronoi

from vemeig.helpers.clipping import clip_to_box, merge_polygons, snap_to_box
from vemeig.mesh_baseclasses import (BOUNDARY_TOL, MeshKind, MeshParameterError,
                                     PolygonalMesh)
from vemeig.polygeom import polygon_centroid, signed_area

log = logging.getLogger(__name__)

SHORT_EDGE_RTOL = 1e-10
VERTEX_MERGE_TOL = 1e-10


class VoronoiGenerationError(Exception):
    """Exception raised when a generator ends up with an empty clipped Voronoi cell."""
    def __init__(self, generator: int, reason: str = 'empty cell after clipping'):
        self.generator = generator
        self.message = f'Voronoi generator {generator}: {reason}'
        super().__init__(self.message)


def _grid_index(N: int):
    return lambda i, j: j*(N + 1) + i


def _grid_vertices(N: int) -> np.ndarray:
    ticks = np.arange(N + 1)/N
    X, Y = np.meshgrid(ticks, ticks, indexing='xy')
    return np.column_stack([X.ravel(), Y.ravel()])


def _square_mesh(N: int) -> PolygonalMesh:
    v = _grid_index(N)
    cells = [(v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)) for j in range(N) for i in range(N)]
    return PolygonalMesh.from_arrays(_grid_vertices(N), cells)


def _triangle_mesh(N: int) -> PolygonalMesh:
    v = _grid_index(N)
    cells = []
    for j in range(N):
        for i in range(N):
            # diagonal from (i, j) to (i+1, j+1)
            cells.append((v(i, j), v(i + 1, j), v(i + 1, j + 1)))
            cells.append((v(i, j), v(i + 1, j + 1), v(i, j + 1)))
    return PolygonalMesh.from_arrays(_grid_vertices(N), cells)


def _dyadic_mesh(N: int) -> PolygonalMesh:
    """ Squares with all edge midpoints inserted: lattice of step 1/(2N) without the cell centres """
    index: Dict[Tuple[int, int], int] = {}
    points = []
    for b in range(2*N + 1):
        for a in range(2*N + 1):
            if a % 2 == 1 and b % 2 == 1:
                continue
            index[(a, b)] = len(points)
            points.append((a/(2*N), b/(2*N)))
    ring = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)]
    cells = [tuple(index[(2*i + da, 2*j + db)] for da, db in ring) for j in range(N) for i in range(N)]
    return PolygonalMesh.from_arrays(np.array(points), cells)


def _hexagon_mesh(n: int, m: int) -> PolygonalMesh:
    """
    Pointy-top hexagons in m+1 rows centred at y = i/m; even rows hold n+1
    hexagons centred at x = j/n, odd rows n hexagons shifted by 1/(2n).

    Coordinates are built on the integer lattice with x unit 1/(2n) and
    y unit 1/(3m): centres at (2j, 3i) or (2j+1, 3i), half-width 1, half-height 2.
    Clipping against the box then only creates lattice points.
    """
    X_max, Y_max = 2*n, 3*m
    ring = np.array([(1, -1), (1, 1), (0, 2), (-1, 1), (-1, -1), (0, -2)], dtype=float)
    polygons = []
    for i in range(m + 1):
        columns = range(n + 1) if i % 2 == 0 else range(n)
        for j in columns:
            centre = np.array([2*j if i % 2 == 0 else 2*j + 1, 3*i], dtype=float)
            clipped = clip_to_box(centre + ring, lower=(0.0, 0.0), upper=(X_max, Y_max))
            if len(clipped) >= 3 and signed_area(clipped) > 0.0:
                polygons.append(clipped)
    vertices, cells, _ = merge_polygons(polygons, merge_tol=0.25, short_edge_rtol=SHORT_EDGE_RTOL)
    vertices = vertices/np.array([X_max, Y_max], dtype=float)
    return PolygonalMesh.from_arrays(vertices, cells)


def generate_structured(kind: MeshKind, level) -> PolygonalMesh:
    """ Triangle, square, dyadic (level N) or hexagon (level (n, m)) mesh of the unit square """
    kind = MeshKind(kind)
    if kind is MeshKind.VORONOI:
        raise MeshParameterError(kind.value, level, 'use generate_voronoi for Voronoi meshes')
    if kind is MeshKind.HEXAGON:
        if isinstance(level, (int, np.integer)) or len(level) != 2:
            raise MeshParameterError(kind.value, level, 'expected an (n, m) pair')
        n, m = (int(v) for v in level)
        if n < 2 or m < 2:
            raise MeshParameterError(kind.value, level, 'n and m must be at least 2')
        mesh = _hexagon_mesh(n, m)
    else:
        if not isinstance(level, (int, np.integer)) or isinstance(level, bool) or level < 1:
            raise MeshParameterError(kind.value, level, 'expected an integer N >= 1')
        builder = {MeshKind.SQUARE: _square_mesh,
                   MeshKind.TRIANGLE: _triangle_mesh,
                   MeshKind.DYADIC: _dyadic_mesh}[kind]
        mesh = builder(int(level))
    log.debug(f'Generated {kind.value} mesh level {level}: {mesh}')
    return mesh


def _mirrored(generators: np.ndarray) -> np.ndarray:
    x, y = generators[:, 0], generators[:, 1]
    return np.vstack([generators,
                      np.column_stack([-x, y]),
                      np.column_stack([2.0 - x, y]),
                      np.column_stack([x, -y]),
                      np.column_stack([x, 2.0 - y])])


def _clipped_cells(generators: np.ndarray) -> List[np.ndarray]:
    """ Voronoi cells of the generators restricted to the unit square, counter-clockwise """
    vor = Voronoi(_mirrored(generators))
    cells = []
    for g, point in enumerate(generators):
        region = vor.regions[vor.point_region[g]]
        if not region or -1 in region:
            raise VoronoiGenerationError(g, 'unbounded Voronoi region')
        polygon = vor.vertices[region]
        angles = np.arctan2(polygon[:, 1] - point[1], polygon[:, 0] - point[0])
        polygon = snap_to_box(polygon[np.argsort(angles, kind='stable')], BOUNDARY_TOL)
        polygon = clip_to_box(polygon)
        if len(polygon) < 3 or signed_area(polygon) <= 0.0:
            raise VoronoiGenerationError(g)
        cells.append(polygon)
    return cells


def generate_voronoi(P: int, seed: int = 1, lloyd_iters: int = 3) -> PolygonalMesh:
    """
    Clipped Voronoi mesh of P uniformly random generators in the unit square,
    regularised by lloyd_iters centroidal relaxation sweeps.
    """
    if not isinstance(P, (int, np.integer)) or P < 4:
        raise MeshParameterError(MeshKind.VORONOI.value, P, 'at least 4 generators required')
    if lloyd_iters < 0:
        raise MeshParameterError(MeshKind.VORONOI.value, P, 'lloyd_iters must be non negative')

    rng = np.random.default_rng(seed)
    generators = rng.random((int(P), 2))
    for sweep in range(lloyd_iters):
        generators = np.array([polygon_centroid(cell) for cell in _clipped_cells(generators)])
        log.debug(f'Lloyd sweep {sweep + 1}/{lloyd_iters} done for P={P}')

    polygons = _clipped_cells(generators)
    vertices, cells, collapsed = merge_polygons(polygons, merge_tol=VERTEX_MERGE_TOL,
                                                short_edge_rtol=SHORT_EDGE_RTOL)
    if collapsed:
        log.warning(f'Collapsed {collapsed} short edges in Voronoi mesh P={P}, seed={seed}')
    for g, cell in enumerate(cells):
        if len(cell) < 3:
            raise VoronoiGenerationError(g, 'cell degenerated while collapsing short edges')
    vertices = snap_to_box(vertices, BOUNDARY_TOL)
    return PolygonalMesh.from_arrays(vertices, cells)


@dataclass(frozen=True)
class MeshStats:
    n_vertices: int
    n_edges: int
    n_cells: int
    n_boundary_vertices: int
    h_max: float
    min_edge_to_h: float
    min_area: float
    cell_edge_histogram: Dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {'vertices': self.n_vertices,
                'edges': self.n_edges,
                'cells': self.n_cells,
                'boundary_vertices': self.n_boundary_vertices,
                'h_max': self.h_max,
                'min_edge_to_h': self.min_edge_to_h,
                'min_area': self.min_area,
                'cell_edge_histogram': dict(self.cell_edge_histogram)}


def mesh_stats(mesh: PolygonalMesh) -> MeshStats:
    """ Regularity summary: h_max, min over cells and edges of h_e/h_E, smallest area, edges per cell """
    ratios = []
    for c in range(mesh.n_cells):
        polygon = mesh.cell_polygon(c)
        lengths = np.hypot(*(np.roll(polygon, -1, axis=0) - polygon).T)
        ratios.append(lengths.min()/mesh.cell_diameters[c])
    histogram = Counter(len(cell) for cell in mesh.cells)
    return MeshStats(n_vertices=mesh.n_vertices,
                     n_edges=mesh.n_edges,
                     n_cells=mesh.n_cells,
                     n_boundary_vertices=int(mesh.boundary_vertex.sum()),
                     h_max=mesh.h_max,
                     min_edge_to_h=float(min(ratios)),
                     min_area=float(mesh.cell_areas.min()),
                     cell_edge_histogram=dict(sorted(histogram.items())))
