# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

"""
Global assembly of the VEM stiffness and mass matrices on interior DOFs.

Global numbering: vertices, then k-1 DOFs per edge, then the internal
moments of each cell. Edge DOFs follow the canonical orientation
(min vertex -> max vertex); a cell traversing the edge the other way sees
them reversed. Boundary vertex and boundary edge DOFs are eliminated.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import scipy.io
import scipy.sparse as sp

from vemeig.mesh_baseclasses import PolygonalMesh
from vemeig.polygeom import ElementGeometry, VemeigNumericalError, element_geometry
from vemeig.vem_dataclasses import DofLayout, LocalVemBlocks
from vemeig.vem_local import ElementError, build_local_blocks

log = logging.getLogger(__name__)

DENSE_THRESHOLD = 20000
EDGE_NODE_TOL = 1e-12

VERTEX, EDGE, INTERNAL = 0, 1, 2


class AssemblyError(VemeigNumericalError):
    """Exception raised when two cells disagree on the DOFs of a shared edge."""
    def __init__(self, edge: Tuple[int, int], reason: str):
        self.edge = edge
        self.message = f'Inconsistent DOF data on edge {edge}: {reason}'
        super().__init__(self.message)


class CapacityError(Exception):
    """Exception raised when a matrix is too large to be densified."""
    def __init__(self, n: int, threshold: int):
        self.n = n
        self.threshold = threshold
        self.message = (f'Matrix of dimension {n} exceeds the dense threshold {threshold}; '
                        f'use the sparse backend or a coarser mesh')
        super().__init__(self.message)


def resolve_threads(threads: Optional[int] = None) -> int:
    """ Worker count: explicit value, else VEMEIG_THREADS, else 1 """
    if threads is None:
        threads = int(os.environ.get('VEMEIG_THREADS', '1') or 1)
    return max(1, int(threads))


@dataclass(frozen=True, eq=False)
class GlobalDofMap:
    """ Local to global DOF map with DOF classification and Dirichlet elimination """
    k: int
    n_vertices: int
    n_edges: int
    n_cells: int
    element_dofs: Tuple[np.ndarray, ...] = field(repr=False)
    is_boundary: np.ndarray = field(repr=False)
    kind: np.ndarray = field(repr=False)

    @property
    def n_int_per_cell(self) -> int:
        return self.k*(self.k - 1)//2

    @property
    def n_total(self) -> int:
        return len(self.is_boundary)

    @property
    def n_boundary(self) -> int:
        return int(self.is_boundary.sum())

    @property
    def n_interior(self) -> int:
        return self.n_total - self.n_boundary

    @cached_property
    def interior_dofs(self) -> np.ndarray:
        return np.flatnonzero(~self.is_boundary)

    @cached_property
    def reduced_index(self) -> np.ndarray:
        """ Full DOF -> interior DOF index, -1 on the boundary """
        index = np.full(self.n_total, -1, dtype=int)
        index[self.interior_dofs] = np.arange(self.n_interior)
        return index

    def counts(self) -> dict:
        return {'vertex': int((self.kind == VERTEX).sum()),
                'edge': int((self.kind == EDGE).sum()),
                'internal': int((self.kind == INTERNAL).sum()),
                'boundary': self.n_boundary,
                'interior': self.n_interior}


def build_dofmap(mesh: PolygonalMesh, k: int) -> GlobalDofMap:
    assert k >= 1, f"degree must be at least 1, got {k}"
    n_v, n_e, n_c = mesh.n_vertices, mesh.n_edges, mesh.n_cells
    n_ei = k - 1
    n_int = k*(k - 1)//2
    edge_offset = n_v
    internal_offset = n_v + n_e*n_ei
    n_total = internal_offset + n_c*n_int

    element_dofs = []
    for c, cell in enumerate(mesh.cells):
        dofs = list(cell)
        for g, sign in mesh.cell_edges[c]:
            ids = [edge_offset + g*n_ei + j for j in range(n_ei)]
            dofs.extend(ids if sign > 0 else ids[::-1])
        dofs.extend(range(internal_offset + c*n_int, internal_offset + (c + 1)*n_int))
        element_dofs.append(np.array(dofs, dtype=int))

    kind = np.full(n_total, INTERNAL, dtype=int)
    kind[:n_v] = VERTEX
    kind[n_v:internal_offset] = EDGE
    is_boundary = np.zeros(n_total, dtype=bool)
    is_boundary[:n_v] = mesh.boundary_vertex
    for g in np.flatnonzero(mesh.boundary_edge):
        is_boundary[edge_offset + g*n_ei: edge_offset + (g + 1)*n_ei] = True

    for arr in (kind, is_boundary, *element_dofs):
        arr.setflags(write=False)
    return GlobalDofMap(k=k, n_vertices=n_v, n_edges=n_e, n_cells=n_c,
                        element_dofs=tuple(element_dofs), is_boundary=is_boundary, kind=kind)


@dataclass(frozen=True, eq=False)
class SparseSymmetric:
    """ Symmetric sparse matrix stored as its upper triangle (csr) """
    upper: sp.csr_matrix

    @classmethod
    def from_matrix(cls, matrix) -> "SparseSymmetric":
        return cls(sp.triu(sp.csr_matrix(matrix), format='csr'))

    @property
    def n(self) -> int:
        return self.upper.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.upper.shape

    @cached_property
    def _full(self) -> sp.csr_matrix:
        return (self.upper + sp.triu(self.upper, k=1, format='csr').T).tocsr()

    def full(self) -> sp.csr_matrix:
        return self._full

    @property
    def nnz(self) -> int:
        return self._full.nnz

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self._full @ x

    def diagonal(self) -> np.ndarray:
        return self.upper.diagonal()

    def permuted(self, perm: np.ndarray) -> "SparseSymmetric":
        """ P^T M P for the ordering perm """
        full = self._full[perm][:, perm]
        return SparseSymmetric.from_matrix(full)


def extract_dense(matrix: SparseSymmetric, threshold: int = DENSE_THRESHOLD) -> np.ndarray:
    if matrix.n > threshold:
        raise CapacityError(matrix.n, threshold)
    return matrix.full().toarray()


def write_matrix_market(matrix: SparseSymmetric, path: Union[str, Path], comment: str = ''):
    """ Coordinate real symmetric MatrixMarket file, lower triangle as the format requires """
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix.full()), comment=comment, field='real',
                     precision=17, symmetry='symmetric')
    log.info(f'Wrote {matrix.n}x{matrix.n} symmetric matrix to {path}')


@dataclass(frozen=True, eq=False)
class VemSystem:
    """ Reduced pencil with the data needed to post-process discrete solutions """
    mesh: PolygonalMesh
    k: int
    alpha: float
    dofmap: GlobalDofMap
    A: SparseSymmetric
    B: SparseSymmetric
    geometries: Tuple[ElementGeometry, ...] = field(repr=False)
    blocks: Tuple[LocalVemBlocks, ...] = field(repr=False)

    @property
    def n_interior(self) -> int:
        return self.dofmap.n_interior


def _element_blocks(mesh: PolygonalMesh, k: int, alpha: float, c: int):
    geom = element_geometry(mesh.cell_polygon(c), check_simple=False)
    try:
        return geom, build_local_blocks(geom, k, alpha)
    except ElementError as err:
        raise ElementError(err.reason, element=c) from err


def _check_shared_edges(mesh: PolygonalMesh, dofmap: GlobalDofMap, geometries, k: int):
    if k < 2:
        return
    points = np.full((dofmap.n_total, 2), np.nan)
    for c, geom in enumerate(geometries):
        layout = DofLayout(k, geom.n_vertices)
        dofs = dofmap.element_dofs[c][:layout.n_v*k]
        local = layout.boundary_points(geom)
        seen = ~np.isnan(points[dofs, 0])
        mismatch = seen & (np.abs(points[dofs] - local).max(axis=1) > EDGE_NODE_TOL)
        if mismatch.any():
            g = (dofs[np.flatnonzero(mismatch)[0]] - dofmap.n_vertices)//(k - 1)
            raise AssemblyError(tuple(int(v) for v in mesh.edges[g]), f'edge nodes of cell {c} do not match')
        points[dofs] = local


def assemble_system(mesh: PolygonalMesh, k: int, alpha: float = 1.0, threads: Optional[int] = None) -> VemSystem:
    """ Element loop plus Dirichlet elimination; element results are merged in element order """
    dofmap = build_dofmap(mesh, k)
    workers = resolve_threads(threads)
    log.debug(f'Assembling k={k} on {mesh} with {workers} worker(s), {dofmap.n_interior} interior DOFs')
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _element_blocks(mesh, k, alpha, c), range(mesh.n_cells)))
    else:
        results = [_element_blocks(mesh, k, alpha, c) for c in range(mesh.n_cells)]
    geometries = tuple(geom for geom, _ in results)
    blocks = tuple(block for _, block in results)
    _check_shared_edges(mesh, dofmap, geometries, k)

    rows = np.concatenate([np.repeat(dofs, len(dofs)) for dofs in dofmap.element_dofs])
    cols = np.concatenate([np.tile(dofs, len(dofs)) for dofs in dofmap.element_dofs])
    a_vals = np.concatenate([block.A_loc.ravel() for block in blocks])
    b_vals = np.concatenate([block.B_loc.ravel() for block in blocks])

    n = dofmap.n_total
    interior = dofmap.interior_dofs
    A_full = sp.coo_matrix((a_vals, (rows, cols)), shape=(n, n)).tocsr()
    B_full = sp.coo_matrix((b_vals, (rows, cols)), shape=(n, n)).tocsr()
    A = SparseSymmetric.from_matrix(A_full[interior][:, interior])
    B = SparseSymmetric.from_matrix(B_full[interior][:, interior])
    return VemSystem(mesh=mesh, k=k, alpha=alpha, dofmap=dofmap, A=A, B=B,
                     geometries=geometries, blocks=blocks)


def assemble(mesh: PolygonalMesh, k: int, alpha: float = 1.0,
             threads: Optional[int] = None) -> Tuple[SparseSymmetric, SparseSymmetric, GlobalDofMap]:
    system = assemble_system(mesh, k, alpha, threads)
    return system.A, system.B, system.dofmap
