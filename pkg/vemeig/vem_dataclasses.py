# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from vemeig.helpers.quadrature import gauss_lobatto
from vemeig.polygeom import ElementGeometry, MomentTable, n_monomials


class BaseVemData:
    def __iter__(self):
        for key in self.INIT_PROPERTIES:
            yield key, getattr(self, key)


@dataclass(frozen=True)
class DofLayout(BaseVemData):
    """ Degrees of freedom of the enhanced space of order k on a polygon with n_v vertices.
    Order: vertex values (CCW), k-1 edge node values per edge (CCW), internal moments (graded lex) """
    INIT_PROPERTIES = ['k', 'n_v']
    k: int
    n_v: int

    def __post_init__(self):
        assert self.k >= 1, f"degree must be at least 1, got {self.k}"
        assert self.n_v >= 3, f"a polygon has at least 3 vertices, got {self.n_v}"

    @property
    def n_e_int(self) -> int:
        return self.k - 1

    @property
    def n_int(self) -> int:
        return n_monomials(self.k - 2)

    @property
    def n_dofs(self) -> int:
        return self.n_v*self.k + self.n_int

    @property
    def n_k(self) -> int:
        return n_monomials(self.k)

    @property
    def vertex_dofs(self) -> range:
        return range(self.n_v)

    def edge_dofs(self, e: int) -> range:
        start = self.n_v + e*self.n_e_int
        return range(start, start + self.n_e_int)

    @property
    def internal_dofs(self) -> range:
        return range(self.n_v*self.k, self.n_dofs)

    def internal_dof(self, moment: int) -> int:
        """ DOF index of the internal moment against the monomial with graded lex index `moment` """
        return self.n_v*self.k + moment

    def edge_trace_dofs(self, e: int) -> list:
        """ DOFs sitting at the k+1 Gauss-Lobatto nodes of edge e, from its start to its end vertex """
        return [e, *self.edge_dofs(e), (e + 1) % self.n_v]

    def edge_nodes(self, geom: ElementGeometry) -> np.ndarray:
        """ Interior Gauss-Lobatto points of every edge, shape (n_v, k-1, 2) """
        nodes, _ = gauss_lobatto(self.k + 1)
        t = 0.5*(nodes[1:-1] + 1.0)
        return geom.edge_starts[:, None, :] + t[None, :, None]*(geom.edge_ends - geom.edge_starts)[:, None, :]

    def boundary_points(self, geom: ElementGeometry) -> np.ndarray:
        """ Points of the pointwise DOFs in DOF order: vertices then edge nodes """
        return np.vstack([geom.vertices, self.edge_nodes(geom).reshape(-1, 2)])


@dataclass(frozen=True, eq=False)
class LocalVemBlocks(BaseVemData):
    """ Projector matrices and local bilinear forms of one element """
    INIT_PROPERTIES = ['D', 'B_nabla', 'G', 'Pnabla_star', 'Pnabla', 'P0_star', 'A_loc', 'B_loc']
    layout: DofLayout
    D: np.ndarray
    B_nabla: np.ndarray
    G: np.ndarray
    Pnabla_star: np.ndarray
    Pnabla: np.ndarray
    P0_star: np.ndarray
    A_loc: Optional[np.ndarray] = None
    B_loc: Optional[np.ndarray] = None
    moments: Optional[MomentTable] = field(default=None, repr=False)

    @property
    def n_dofs(self) -> int:
        return self.layout.n_dofs

    @property
    def P0(self) -> np.ndarray:
        """ DOF form of the L2 projector """
        return self.D @ self.P0_star
