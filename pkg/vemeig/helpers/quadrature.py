# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial import legendre


@lru_cache(maxsize=None)
def gauss_legendre(n_points: int) -> Tuple[np.ndarray, np.ndarray]:
    """ Gauss-Legendre nodes and weights on [-1, 1], exact for degree 2n-1 """
    nodes, weights = legendre.leggauss(n_points)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre_for_degree(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    return gauss_legendre(max(1, degree // 2 + 1))


@lru_cache(maxsize=None)
def gauss_lobatto(n_points: int) -> Tuple[np.ndarray, np.ndarray]:
    """ Gauss-Lobatto nodes and weights on [-1, 1], exact for degree 2n-3 """
    assert n_points >= 2, "Gauss-Lobatto rule needs at least the two end points"
    order = n_points - 1
    p_order = legendre.Legendre.basis(order)
    interior = np.sort(p_order.deriv().roots().real) if order > 1 else np.array([])
    nodes = np.concatenate([[-1.0], interior, [1.0]])
    weights = 2.0 / (order * (order + 1) * p_order(nodes)**2)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@lru_cache(maxsize=None)
def _reference_triangle_rule(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    # collapsed tensor rule on (0,0),(1,0),(0,1); the Jacobian adds one degree in s
    s, ws = gauss_legendre(degree // 2 + 2)
    s = 0.5*(s + 1.0)
    ws = 0.5*ws
    t, wt = s, ws
    S, T = np.meshgrid(s, t, indexing='ij')
    W = np.outer(ws, wt) * S
    points = np.column_stack([(S*(1.0 - T)).ravel(), (S*T).ravel()])
    weights = W.ravel()
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def triangle_rule(v0, v1, v2, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """ Quadrature on a triangle exact for polynomials of the given degree.
    Weights carry the signed area, so clockwise triangles get negative weights. """
    v0, v1, v2 = (np.asarray(v, dtype=float) for v in (v0, v1, v2))
    ref_points, ref_weights = _reference_triangle_rule(degree)
    e1 = v1 - v0
    e2 = v2 - v0
    det = e1[0]*e2[1] - e1[1]*e2[0]
    points = v0 + np.outer(ref_points[:, 0], e1) + np.outer(ref_points[:, 1], e2)
    return points, ref_weights*det


def polygon_rule(vertices, degree: int, apex=None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Signed fan quadrature over a simple polygon.

    Triangles (apex, v_i, v_i+1) are integrated with signed weights, which is
    exact for polynomials on any simple polygon and accurate for smooth
    integrands whenever the polygon is star shaped with respect to the apex.
    """
    vertices = np.asarray(vertices, dtype=float)
    if apex is None:
        apex = vertices.mean(axis=0)
    points, weights = [], []
    for i in range(len(vertices)):
        p, w = triangle_rule(apex, vertices[i], vertices[(i + 1) % len(vertices)], degree)
        points.append(p)
        weights.append(w)
    return np.vstack(points), np.concatenate(weights)
