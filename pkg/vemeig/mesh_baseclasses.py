# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from vemeig.polygeom import is_simple_polygon, polygon_diameter, signed_area

BOUNDARY_TOL = 1e-12
AREA_TOL = 1e-12


class MeshParameterError(ValueError):
    """Exception raised for invalid mesh family parameters."""
    def __init__(self, kind: str, level, reason: str):
        self.kind = kind
        self.level = level
        self.message = f'Invalid level {level!r} for {kind} mesh: {reason}'
        super().__init__(self.message)


class MeshValidationError(Exception):
    """Exception raised when a mesh violates one of the polygonal mesh invariants."""
    def __init__(self, reason: str, cell: Optional[int] = None, edge: Optional[Tuple[int, int]] = None):
        self.reason = reason
        self.cell = cell
        self.edge = edge
        where = f'cell {cell}: ' if cell is not None else (f'edge {edge}: ' if edge is not None else '')
        self.message = f'Invalid mesh, {where}{reason}'
        super().__init__(self.message)


class MeshKind(str, enum.Enum):
    TRIANGLE = 'triangle'
    SQUARE = 'square'
    VORONOI = 'voronoi'
    HEXAGON = 'hexagon'
    DYADIC = 'dyadic'

    @property
    def symbol(self) -> str:
        return {'triangle': 'T', 'square': 'S', 'voronoi': 'V', 'hexagon': 'H', 'dyadic': 'D'}[self.value]


Level = Union[int, Tuple[int, int]]


def parse_level(kind: MeshKind, text: str) -> Level:
    """ Parse a level string: "8" for T/S/D/V, "8x10" for hexagons """
    kind = MeshKind(kind)
    text = str(text).strip().lower()
    try:
        if kind is MeshKind.HEXAGON:
            n, m = text.split('x')
            return int(n), int(m)
        return int(text)
    except ValueError:
        raise MeshParameterError(kind.value, text, 'cannot parse level') from None


@dataclass(frozen=True)
class MeshFamily:
    """ One member of a mesh family: N (T, S, D), P (V) or (n, m) (H) """
    kind: MeshKind
    level: Level
    seed: int = 1
    lloyd_iters: int = 3

    def __post_init__(self):
        object.__setattr__(self, 'kind', MeshKind(self.kind))
        if self.kind is MeshKind.HEXAGON:
            if isinstance(self.level, int) or len(self.level) != 2:
                raise MeshParameterError(self.kind.value, self.level, 'expected an (n, m) pair')
            n, m = (int(v) for v in self.level)
            if n < 2 or m < 2:
                raise MeshParameterError(self.kind.value, self.level, 'n and m must be at least 2')
            object.__setattr__(self, 'level', (n, m))
        else:
            if not isinstance(self.level, (int, np.integer)) or isinstance(self.level, bool):
                raise MeshParameterError(self.kind.value, self.level, 'expected a positive integer')
            minimum = 4 if self.kind is MeshKind.VORONOI else 1
            if self.level < minimum:
                raise MeshParameterError(self.kind.value, self.level, f'must be at least {minimum}')
            object.__setattr__(self, 'level', int(self.level))
        if self.lloyd_iters < 0:
            raise MeshParameterError(self.kind.value, self.level, 'lloyd_iters must be non negative')

    @property
    def label(self) -> str:
        if self.kind is MeshKind.HEXAGON:
            return f'{self.level[0]}x{self.level[1]}'
        return str(self.level)

    @property
    def refinement(self) -> int:
        """ Scalar used to order levels: N, P or m """
        return self.level[1] if self.kind is MeshKind.HEXAGON else self.level

    def generate(self) -> "PolygonalMesh":
        from vemeig import mesh
        if self.kind is MeshKind.VORONOI:
            return mesh.generate_voronoi(self.level, seed=self.seed, lloyd_iters=self.lloyd_iters)
        return mesh.generate_structured(self.kind, self.level)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PolygonalMesh:
    """ Planar straight line mesh of the unit square with counter-clockwise cells """
    vertices: np.ndarray
    cells: Tuple[Tuple[int, ...], ...]
    boundary_vertex: np.ndarray = field(repr=False)

    @classmethod
    def from_arrays(cls, vertices: ArrayLike, cells: Sequence[Sequence[int]], validate: bool = True) -> "PolygonalMesh":
        vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        cells = tuple(tuple(int(i) for i in cell) for cell in cells)
        on_boundary = ((np.abs(vertices) <= BOUNDARY_TOL) | (np.abs(vertices - 1.0) <= BOUNDARY_TOL)).any(axis=1)
        mesh = cls(_readonly(vertices), cells, _readonly(on_boundary))
        if validate:
            mesh.validate()
        return mesh

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def cell_polygon(self, c: int) -> np.ndarray:
        return self.vertices[list(self.cells[c])]

    @cached_property
    def _topology(self):
        edge_ids: Dict[Tuple[int, int], int] = {}
        edge_users: List[List[Tuple[int, int]]] = []
        cell_edges = []
        for c, cell in enumerate(self.cells):
            local = []
            for i, a in enumerate(cell):
                b = cell[(i + 1) % len(cell)]
                key = (min(a, b), max(a, b))
                if key not in edge_ids:
                    edge_ids[key] = len(edge_users)
                    edge_users.append([])
                sign = 1 if a < b else -1
                edge_users[edge_ids[key]].append((c, sign))
                local.append((edge_ids[key], sign))
            cell_edges.append(tuple(local))
        edges = np.array(sorted(edge_ids, key=edge_ids.get), dtype=int).reshape(-1, 2)
        return _readonly(edges), tuple(cell_edges), tuple(tuple(u) for u in edge_users)

    @property
    def edges(self) -> np.ndarray:
        """ Unique edges as (min vertex, max vertex), numbered by first appearance """
        return self._topology[0]

    @property
    def cell_edges(self) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
        """ Per cell, the (global edge id, orientation sign) of each local edge; +1 when it runs min -> max """
        return self._topology[1]

    @property
    def edge_cells(self) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
        """ Per edge, the (cell, orientation sign) pairs using it """
        return self._topology[2]

    @cached_property
    def edge_cell_count(self) -> np.ndarray:
        return _readonly(np.array([len(users) for users in self.edge_cells], dtype=int))

    @cached_property
    def boundary_edge(self) -> np.ndarray:
        return _readonly(self.edge_cell_count == 1)

    @cached_property
    def cell_diameters(self) -> np.ndarray:
        return _readonly(np.array([polygon_diameter(self.cell_polygon(c)) for c in range(self.n_cells)]))

    @cached_property
    def cell_areas(self) -> np.ndarray:
        return _readonly(np.array([signed_area(self.cell_polygon(c)) for c in range(self.n_cells)]))

    @property
    def h_max(self) -> float:
        return float(self.cell_diameters.max())

    def validate(self):
        """ Check every mesh invariant, raising MeshValidationError on the first violation """
        n_v = self.n_vertices
        if self.n_cells == 0:
            raise MeshValidationError('mesh has no cells')
        for c, cell in enumerate(self.cells):
            if len(cell) < 3:
                raise MeshValidationError(f'has {len(cell)} vertices, at least 3 required', cell=c)
            if min(cell) < 0 or max(cell) >= n_v:
                raise MeshValidationError(f'vertex index out of range 0..{n_v - 1}', cell=c)
            if len(set(cell)) != len(cell):
                raise MeshValidationError('has duplicate vertex indices', cell=c)
        if np.any(self.vertices < -BOUNDARY_TOL) or np.any(self.vertices > 1.0 + BOUNDARY_TOL):
            raise MeshValidationError('vertices outside the unit square')
        for c in range(self.n_cells):
            area = self.cell_areas[c]
            if area <= 0.0:
                raise MeshValidationError(f'is not counter-clockwise (signed area {area:.3e})', cell=c)
            if not is_simple_polygon(self.cell_polygon(c)):
                raise MeshValidationError('is not a simple polygon', cell=c)

        for e, users in enumerate(self.edge_cells):
            edge = tuple(int(v) for v in self.edges[e])
            if len(users) > 2:
                raise MeshValidationError(f'shared by {len(users)} cells', edge=edge)
            if len(users) == 2 and users[0][1] == users[1][1]:
                raise MeshValidationError('traversed in the same direction by both cells', edge=edge)
            if len(users) == 1:
                a, b = self.vertices[edge[0]], self.vertices[edge[1]]
                on_side = any(abs(a[ax] - s) <= BOUNDARY_TOL and abs(b[ax] - s) <= BOUNDARY_TOL
                              for ax in (0, 1) for s in (0.0, 1.0))
                if not on_side:
                    raise MeshValidationError('used by a single cell but not on the boundary', edge=edge)

        total = float(self.cell_areas.sum())
        if abs(total - 1.0) > AREA_TOL:
            raise MeshValidationError(f'cell areas sum to {total!r}, expected 1')
        used = np.zeros(n_v, dtype=bool)
        used[[v for cell in self.cells for v in cell]] = True
        if not used.all():
            raise MeshValidationError(f'vertex {int(np.flatnonzero(~used)[0])} belongs to no cell')
        euler = n_v - self.n_edges + self.n_cells
        if euler != 1:
            raise MeshValidationError(f'Euler characteristic V - E + C = {euler}, expected 1')

    def __eq__(self, other):
        if self.__class__.__name__ != other.__class__.__name__:
            return False
        return (self.cells == other.cells
                and self.vertices.shape == other.vertices.shape
                and bool(np.array_equal(self.vertices, other.vertices)))

    def __repr__(self) -> str:
        return f'{self.__class__.__name__}(vertices={self.n_vertices}, cells={self.n_cells}, h_max={self.h_max:.4g})'
