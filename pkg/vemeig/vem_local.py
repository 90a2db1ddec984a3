# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

"""
Local enhanced virtual element space of order k.

Π∇ is computed from the DOFs alone: the boundary term of ∫∇v·∇m uses the
exact edge trace of v (a degree k polynomial sampled at Gauss-Lobatto nodes),
the volume term -∫v Δm uses the internal moments. Π⁰ uses the internal
moments for |α| <= k-2 and the moments of Π∇v for |α| in {k-1, k}.
"""

import logging
from dataclasses import replace
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg

from vemeig.helpers.quadrature import gauss_lobatto, polygon_rule
from vemeig.polygeom import (ElementGeometry, MomentTable, ScaledMonomialBasis, VemeigNumericalError,
                             monomial_exponents, monomial_index, monomial_moments)
from vemeig.vem_dataclasses import DofLayout, LocalVemBlocks

log = logging.getLogger(__name__)

PROJECTOR_COND_LIMIT = 1e14


class StabilizationParameterError(ValueError):
    """Exception raised for a non-positive stabilization parameter."""
    def __init__(self, alpha: float):
        self.alpha = alpha
        self.message = f'Stabilization parameter must be positive, got {alpha}'
        super().__init__(self.message)


class ElementError(VemeigNumericalError):
    """Exception raised when a projector system or a Gram matrix is singular on an element."""
    def __init__(self, reason: str, element: Optional[int] = None):
        self.element = element
        self.reason = reason
        prefix = f'Element {element}: ' if element is not None else ''
        self.message = f'{prefix}{reason}'
        super().__init__(self.message)


def build_dof_matrix(geom: ElementGeometry, moments: MomentTable, k: int) -> np.ndarray:
    """ D[i, α] = dof_i(m_α), shape (N_E, n_k) """
    layout = DofLayout(k, geom.n_vertices)
    basis = ScaledMonomialBasis.for_element(geom, k)
    D = np.empty((layout.n_dofs, layout.n_k))
    D[:layout.n_v*k] = basis.evaluate(layout.boundary_points(geom))
    D[layout.n_v*k:] = moments.H[:layout.n_int, :]/geom.area
    return D


def build_pinabla_rhs(geom: ElementGeometry, k: int) -> np.ndarray:
    """ B[α, i] = a^E(φ_i, m_α) for α >= 1, row 0 holds the mean condition; shape (n_k, N_E) """
    layout = DofLayout(k, geom.n_vertices)
    basis = ScaledMonomialBasis.for_element(geom, k)
    h = geom.diameter
    B = np.zeros((layout.n_k, layout.n_dofs))

    nodes, weights = gauss_lobatto(k + 1)
    t = 0.5*(nodes + 1.0)
    for e, edge in enumerate(geom.edges):
        points = edge.point(t)
        dn = basis.gradient(points) @ edge.normal
        columns = layout.edge_trace_dofs(e)
        B[1:, columns] += (0.5*edge.length*weights[:, None]*dn[:, 1:]).T

    for alpha, (a, b) in enumerate(monomial_exponents(k)):
        if a >= 2:
            B[alpha, layout.internal_dof(monomial_index(a - 2, b))] -= geom.area*a*(a - 1)/h**2
        if b >= 2:
            B[alpha, layout.internal_dof(monomial_index(a, b - 2))] -= geom.area*b*(b - 1)/h**2

    if k == 1:
        lengths = geom.edge_lengths
        B[0, :] = 0.5*(lengths + np.roll(lengths, 1))
    else:
        B[0, layout.internal_dof(0)] = geom.area
    return B


def build_projector_pinabla(geom: ElementGeometry, moments: MomentTable, k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    H1 projector onto P_k. Returns (Pnabla_star, Pnabla, D, B, G) with
    G = B D, Pnabla_star = G^-1 B (coefficients) and Pnabla = D Pnabla_star (DOFs).
    """
    D = build_dof_matrix(geom, moments, k)
    B = build_pinabla_rhs(geom, k)
    G = B @ D
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > PROJECTOR_COND_LIMIT:
        raise ElementError(f'projector matrix G is singular (condition number {cond:.3e})')
    Pnabla_star = scipy.linalg.solve(G, B)
    return Pnabla_star, D @ Pnabla_star, D, B, G


def build_projector_pi0(geom: ElementGeometry, moments: MomentTable, k: int, Pnabla_star: np.ndarray) -> np.ndarray:
    """ L2 projector onto P_k in coefficient form, shape (n_k, N_E) """
    layout = DofLayout(k, geom.n_vertices)
    C = moments.H @ Pnabla_star
    for beta in range(layout.n_int):
        C[beta, :] = 0.0
        C[beta, layout.internal_dof(beta)] = geom.area
    try:
        factor = scipy.linalg.cho_factor(moments.H)
    except np.linalg.LinAlgError as err:
        raise ElementError(f'monomial mass matrix H is not positive definite: {err}') from err
    return scipy.linalg.cho_solve(factor, C)


def local_stiffness(blocks: LocalVemBlocks, moments: MomentTable, alpha: float = 1.0) -> np.ndarray:
    """ Consistency term on Π∇ plus alpha times dofi-dofi stabilization of (I - Π∇) """
    if not alpha > 0:
        raise StabilizationParameterError(alpha)
    G_tilde = np.array(moments.G)
    consistency = blocks.Pnabla_star.T @ G_tilde @ blocks.Pnabla_star
    complement = np.eye(blocks.n_dofs) - blocks.Pnabla
    A_loc = consistency + alpha*complement.T @ complement
    return 0.5*(A_loc + A_loc.T)


def local_mass(blocks: LocalVemBlocks, moments: MomentTable) -> np.ndarray:
    """ b^E(Π⁰u, Π⁰v), no stabilization """
    B_loc = blocks.P0_star.T @ moments.H @ blocks.P0_star
    return 0.5*(B_loc + B_loc.T)


def build_local_blocks(geom: ElementGeometry, k: int, alpha: float = 1.0) -> LocalVemBlocks:
    """ Moments, both projectors and the local stiffness and mass of one element """
    moments = monomial_moments(geom, k)
    Pnabla_star, Pnabla, D, B, G = build_projector_pinabla(geom, moments, k)
    P0_star = build_projector_pi0(geom, moments, k, Pnabla_star)
    blocks = LocalVemBlocks(layout=DofLayout(k, geom.n_vertices),
                            D=D,
                            B_nabla=B,
                            G=G,
                            Pnabla_star=Pnabla_star,
                            Pnabla=Pnabla,
                            P0_star=P0_star,
                            moments=moments)
    return replace(blocks, A_loc=local_stiffness(blocks, moments, alpha), B_loc=local_mass(blocks, moments))


def interpolate_dofs(geom: ElementGeometry, k: int, func: Callable) -> np.ndarray:
    """ DOF vector of a smooth function func(x, y): point values and internal moments """
    layout = DofLayout(k, geom.n_vertices)
    points = layout.boundary_points(geom)
    dofs = np.empty(layout.n_dofs)
    dofs[:len(points)] = func(points[:, 0], points[:, 1])
    if layout.n_int:
        qp, qw = polygon_rule(geom.vertices, 2*k + 4, apex=geom.centroid)
        basis = ScaledMonomialBasis(k - 2, geom.centroid, geom.diameter)
        values = func(qp[:, 0], qp[:, 1])
        dofs[len(points):] = (qw*values) @ basis.evaluate(qp)/geom.area
    return dofs
