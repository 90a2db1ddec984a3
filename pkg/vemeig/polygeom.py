# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

"""
Exact geometry and polynomial moments of polygonal elements.

All integrals of scaled monomials are reduced to edge integrals with the
divergence theorem and evaluated with Gauss-Legendre rules of sufficient
exactness, so no triangulation of the element is needed.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from numpy.typing import ArrayLike

from vemeig.helpers.quadrature import gauss_legendre_for_degree


class VemeigNumericalError(Exception):
    """Base class of failures raised by the numerical layers."""


class GeometryError(VemeigNumericalError):
    """Exception raised for polygons that are clockwise, degenerate or self-intersecting."""
    def __init__(self, reason: str):
        self.reason = reason
        self.message = f'Invalid element geometry: {reason}'
        super().__init__(self.message)


@lru_cache(maxsize=None)
def monomial_exponents(k: int) -> Tuple[Tuple[int, int], ...]:
    """ Exponents (a, b) of x^a y^b for a+b <= k in graded lexicographic order """
    return tuple((d - b, b) for d in range(k + 1) for b in range(d + 1))


def monomial_index(a: int, b: int) -> int:
    d = a + b
    return d*(d + 1)//2 + b


def n_monomials(k: int) -> int:
    return (k + 1)*(k + 2)//2 if k >= 0 else 0


@dataclass(frozen=True, eq=False)
class Edge:
    start: np.ndarray
    end: np.ndarray
    length: float
    normal: np.ndarray

    def point(self, t):
        """ Points at parameter t in [0, 1] along the edge """
        t = np.asarray(t, dtype=float)
        return self.start + np.multiply.outer(t, self.end - self.start)


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """ Geometric data of one polygonal element, vertices in counter-clockwise order """
    vertices: np.ndarray
    area: float
    centroid: np.ndarray
    diameter: float
    edge_starts: np.ndarray
    edge_ends: np.ndarray
    edge_lengths: np.ndarray
    edge_normals: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def perimeter(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def edges(self) -> List[Edge]:
        return [Edge(s, e, float(l), n) for s, e, l, n in
                zip(self.edge_starts, self.edge_ends, self.edge_lengths, self.edge_normals)]


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0])*(c[1] - a[1]) - (b[1] - a[1])*(c[0] - a[0])

    def on_segment(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and ((d3 > 0) != (d4 > 0)) and d3 != 0 and d4 != 0:
        return True
    if d1 == 0 and on_segment(q1, q2, p1): return True
    if d2 == 0 and on_segment(q1, q2, p2): return True
    if d3 == 0 and on_segment(p1, p2, q1): return True
    if d4 == 0 and on_segment(p1, p2, q2): return True
    return False


def is_simple_polygon(vertices: np.ndarray) -> bool:
    """ True when no two non-adjacent edges of the closed polygon touch """
    n = len(vertices)
    if n < 3:
        return False
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]):
                return False
    return True


def signed_area(vertices: ArrayLike) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5*float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(vertices: ArrayLike) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x*yn - xn*y
    area = 0.5*cross.sum()
    return np.array([((x + xn)*cross).sum(), ((y + yn)*cross).sum()]) / (6.0*area)


def polygon_diameter(vertices: ArrayLike) -> float:
    v = np.asarray(vertices, dtype=float)
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=-1)).max())


def element_geometry(polygon: ArrayLike, check_simple: bool = True) -> ElementGeometry:
    """ Area, centroid, diameter and edge data of a counter-clockwise polygon """
    vertices = np.array(polygon, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
        raise GeometryError(f'expected at least 3 planar vertices, got shape {vertices.shape}')
    area = signed_area(vertices)
    if area <= 0.0:
        raise GeometryError(f'polygon is clockwise or degenerate (signed area {area:.3e})')
    if check_simple and not is_simple_polygon(vertices):
        raise GeometryError('polygon is self-intersecting')

    starts = vertices
    ends = np.roll(vertices, -1, axis=0)
    tangents = ends - starts
    lengths = np.hypot(tangents[:, 0], tangents[:, 1])
    if np.any(lengths == 0.0):
        raise GeometryError('polygon has repeated consecutive vertices')
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]]) / lengths[:, None]

    for arr in (vertices, ends, lengths, normals):
        arr.setflags(write=False)
    centroid = polygon_centroid(vertices)
    centroid.setflags(write=False)
    return ElementGeometry(vertices=vertices,
                           area=area,
                           centroid=centroid,
                           diameter=polygon_diameter(vertices),
                           edge_starts=vertices,
                           edge_ends=ends,
                           edge_lengths=lengths,
                           edge_normals=normals)


@dataclass(frozen=True, eq=False)
class ScaledMonomialBasis:
    """ m_(a,b)(x) = ((x - x_E)/h_E)^a ((y - y_E)/h_E)^b, graded lexicographic order """
    degree: int
    centroid: np.ndarray
    diameter: float

    @classmethod
    def for_element(cls, geom: ElementGeometry, degree: int) -> "ScaledMonomialBasis":
        return cls(degree, geom.centroid, geom.diameter)

    @property
    def exponents(self) -> Tuple[Tuple[int, int], ...]:
        return monomial_exponents(self.degree)

    @property
    def size(self) -> int:
        return n_monomials(self.degree)

    def scaled(self, points: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return (p[:, 0] - self.centroid[0])/self.diameter, (p[:, 1] - self.centroid[1])/self.diameter

    def evaluate(self, points: ArrayLike) -> np.ndarray:
        """ Values of all basis monomials, shape (n_points, n_k) """
        X, Y = self.scaled(points)
        return np.column_stack([X**a * Y**b for a, b in self.exponents])

    def gradient(self, points: ArrayLike) -> np.ndarray:
        """ Gradients of all basis monomials, shape (n_points, n_k, 2) """
        X, Y = self.scaled(points)
        gx, gy = [], []
        for a, b in self.exponents:
            gx.append(a*X**max(a - 1, 0)*Y**b if a > 0 else np.zeros_like(X))
            gy.append(b*X**a*Y**max(b - 1, 0) if b > 0 else np.zeros_like(Y))
        return np.stack([np.column_stack(gx), np.column_stack(gy)], axis=-1) / self.diameter


def monomial_integrals(geom: ElementGeometry, max_degree: int) -> np.ndarray:
    """
    Table I[p, q] = integral over E of m_(p,q) for p + q <= max_degree.

    With X = (x - x_E)/h_E the field F = (h_E X^(p+1) Y^q / (p+1), 0) has
    divergence X^p Y^q, so each entry is an edge integral of degree p+q+1.
    """
    nodes, weights = gauss_legendre_for_degree(max_degree + 1)
    t = 0.5*(nodes + 1.0)
    h = geom.diameter
    integrals = np.zeros((max_degree + 1, max_degree + 1))
    for start, end, length, normal in zip(geom.edge_starts, geom.edge_ends, geom.edge_lengths, geom.edge_normals):
        if normal[0] == 0.0:
            continue
        points = start + np.outer(t, end - start)
        X = (points[:, 0] - geom.centroid[0])/h
        Y = (points[:, 1] - geom.centroid[1])/h
        w = 0.5*length*weights*normal[0]
        Xpow = np.vander(X, max_degree + 2, increasing=True)
        Ypow = np.vander(Y, max_degree + 1, increasing=True)
        for p in range(max_degree + 1):
            for q in range(max_degree + 1 - p):
                integrals[p, q] += h/(p + 1)*np.dot(w, Xpow[:, p + 1]*Ypow[:, q])
    return integrals


@dataclass(frozen=True, eq=False)
class MomentTable:
    """ Precomputed integrals of products of scaled monomials on one element """
    degree: int
    H: np.ndarray
    G: np.ndarray
    integrals: np.ndarray = field(repr=False)

    @property
    def n_k(self) -> int:
        return n_monomials(self.degree)


def monomial_moments(geom: ElementGeometry, k: int) -> MomentTable:
    """ Mass matrix H and gradient stiffness G of the degree-k scaled monomials """
    integrals = monomial_integrals(geom, 2*k)
    exps = monomial_exponents(k)
    n_k = len(exps)
    H = np.empty((n_k, n_k))
    G = np.zeros((n_k, n_k))
    for i, (a, b) in enumerate(exps):
        for j, (c, d) in enumerate(exps):
            H[i, j] = integrals[a + c, b + d]
            value = 0.0
            if a > 0 and c > 0:
                value += a*c*integrals[a + c - 2, b + d]
            if b > 0 and d > 0:
                value += b*d*integrals[a + c, b + d - 2]
            G[i, j] = value/geom.diameter**2
    for arr in (H, G, integrals):
        arr.setflags(write=False)
    return MomentTable(degree=k, H=H, G=G, integrals=integrals)


def edge_polynomial_integral(edge: Edge, coefficients: ArrayLike) -> float:
    """ Integral along the edge of f(s) = sum c_i s^i, s the arclength from the start point """
    coefficients = np.atleast_1d(np.asarray(coefficients, dtype=float))
    nodes, weights = gauss_legendre_for_degree(len(coefficients) - 1)
    s = 0.5*edge.length*(nodes + 1.0)
    return float(0.5*edge.length*np.dot(weights, np.polynomial.polynomial.polyval(s, coefficients)))
