"""
Module tests.test_vem_local
------------------
:author: vemeig developers
This is a test module to test the local projectors and the local stiffness and mass matrices.
"""

import numpy as np
from numpy.testing import assert_allclose
from pytest import mark, raises

from vemeig.polygeom import ScaledMonomialBasis, element_geometry, monomial_moments
from vemeig.vem_dataclasses import DofLayout
from vemeig.vem_local import (StabilizationParameterError, build_local_blocks, build_projector_pinabla,
                               interpolate_dofs, local_stiffness)


def random_star_polygon(rng, n_vertices):
    while True:
        angles = np.sort(rng.uniform(0.0, 2*np.pi, n_vertices))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2*np.pi]]))
        if gaps.min() > 0.1 and gaps.max() < 0.8*np.pi:
            break
    radii = rng.uniform(0.4, 1.0, n_vertices)
    return np.column_stack([radii*np.cos(angles), radii*np.sin(angles)])


UNIT_TRIANGLE = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
HEXAGON = [(np.cos(t), np.sin(t)) for t in np.arange(6)*np.pi/3]


@mark.parametrize('k, n_v, n_dofs, n_int',
                 [(1, 3, 3, 0),
                  (2, 4, 9, 1),
                  (3, 6, 21, 3),
                  (4, 5, 26, 6),
                 ])
def test_dof_layout(k, n_v, n_dofs, n_int):
    layout = DofLayout(k, n_v)
    assert layout.n_dofs == n_dofs
    assert layout.n_int == n_int
    assert list(layout.internal_dofs) == list(range(n_v*k, n_dofs))
    assert layout.edge_trace_dofs(n_v - 1)[-1] == 0
    assert dict(layout) == {'k': k, 'n_v': n_v}


def test_edge_nodes_are_interior_lobatto_points():
    geom = element_geometry(UNIT_SQUARE)
    nodes = DofLayout(3, 4).edge_nodes(geom)
    t = 0.5*(1.0 - 1.0/np.sqrt(5.0))
    assert_allclose(nodes[0], [[t, 0.0], [1.0 - t, 0.0]], atol=1e-15)
    assert_allclose(nodes[1], [[1.0, t], [1.0, 1.0 - t]], atol=1e-15)


def test_p1_triangle_matches_fem():
    blocks = build_local_blocks(element_geometry(UNIT_TRIANGLE), 1)
    stiffness = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    mass = (0.5/12.0)*np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]])
    assert_allclose(blocks.A_loc, stiffness, atol=1e-12)
    assert_allclose(blocks.B_loc, mass, atol=1e-12)


@mark.parametrize('k', [1, 2, 3, 4])
def test_projectors_fix_polynomials(k):
    rng = np.random.default_rng(100 + k)
    for n_v in (3, 5, 8):
        geom = element_geometry(random_star_polygon(rng, n_v))
        blocks = build_local_blocks(geom, k)
        identity = np.eye(blocks.layout.n_k)
        tol = 1e-12*max(1.0, np.abs(blocks.Pnabla_star).max(), np.abs(blocks.P0_star).max())
        assert_allclose(blocks.Pnabla_star @ blocks.D, identity, atol=tol)
        assert_allclose(blocks.P0_star @ blocks.D, identity, atol=tol)

        basis = ScaledMonomialBasis.for_element(geom, k)
        coefficients = rng.normal(size=basis.size)
        dofs = interpolate_dofs(geom, k, lambda x, y: basis.evaluate(np.column_stack([x, y])) @ coefficients)
        assert_allclose(blocks.Pnabla_star @ dofs, coefficients, atol=tol*np.abs(coefficients).sum())
        assert_allclose(blocks.P0_star @ dofs, coefficients, atol=tol*np.abs(coefficients).sum())


@mark.parametrize('k', [1, 2, 3, 4])
def test_dof_matrix_full_rank_and_idempotence(k):
    rng = np.random.default_rng(200 + k)
    for _ in range(5):
        blocks = build_local_blocks(element_geometry(random_star_polygon(rng, 7)), k)
        singular = np.linalg.svd(blocks.D, compute_uv=False)
        assert singular[-1] > 1e-10*singular[0]
        assert_allclose(blocks.Pnabla @ blocks.Pnabla, blocks.Pnabla, atol=1e-11*max(1.0, np.abs(blocks.Pnabla).max()))
        assert_allclose(blocks.P0 @ blocks.P0, blocks.P0, atol=1e-11*max(1.0, np.abs(blocks.P0).max()))


def test_pinabla_orthogonality_on_hexagon():
    rng = np.random.default_rng(17)
    hexagon = np.array(HEXAGON) + 0.1*rng.normal(size=(6, 2))
    geom = element_geometry(hexagon)
    moments = monomial_moments(geom, 2)
    Pnabla_star, Pnabla, D, B, G = build_projector_pinabla(geom, moments, 2)
    v = rng.normal(size=D.shape[0])
    # a(Π∇v - v, m_α) for α >= 1 and the mean condition, through the DOF functionals
    residual = B @ (Pnabla @ v - v)
    assert np.abs(residual).max() <= 1e-12*np.abs(B).max()*np.abs(v).max()*len(v)
    assert_allclose(G, B @ D, atol=0.0)


@mark.parametrize('k', [1, 2])
def test_l2_and_h1_projectors_coincide_for_low_degree(k):
    rng = np.random.default_rng(300 + k)
    worst = 0.0
    for _ in range(500):
        blocks = build_local_blocks(element_geometry(random_star_polygon(rng, rng.integers(3, 10))), k)
        v = rng.normal(size=blocks.n_dofs)
        worst = max(worst, np.linalg.norm((blocks.P0_star - blocks.Pnabla_star) @ v)/np.linalg.norm(v))
    assert worst <= 1e-11


def test_l2_and_h1_projectors_differ_for_cubics():
    rng = np.random.default_rng(42)
    best = 0.0
    for _ in range(20):
        blocks = build_local_blocks(element_geometry(random_star_polygon(rng, 6)), 3)
        v = rng.normal(size=blocks.n_dofs)
        best = max(best, np.linalg.norm((blocks.P0_star - blocks.Pnabla_star) @ v)/np.linalg.norm(v))
    assert best > 1e-6


@mark.parametrize('k', [1, 2, 3, 4])
def test_local_stiffness_consistency(k):
    rng = np.random.default_rng(400 + k)
    for polygon in (UNIT_SQUARE, HEXAGON, random_star_polygon(rng, 9)):
        blocks = build_local_blocks(element_geometry(polygon), k)
        G = blocks.moments.G
        scale = np.abs(blocks.A_loc).max()
        # columns of D are the DOFs of the scaled monomials
        assert_allclose(blocks.D.T @ blocks.A_loc @ blocks.D, G, atol=1e-11*scale)
        assert np.abs(blocks.A_loc @ blocks.D[:, 0]).max() <= 1e-12*scale
        assert_allclose(blocks.A_loc, blocks.A_loc.T, atol=0.0)
        assert np.linalg.eigvalsh(blocks.A_loc).min() >= -1e-12*scale


@mark.parametrize('k', [1, 2, 3, 4])
def test_local_mass_properties(k):
    rng = np.random.default_rng(500 + k)
    for polygon in (UNIT_SQUARE, HEXAGON, random_star_polygon(rng, 9)):
        geom = element_geometry(polygon)
        blocks = build_local_blocks(geom, k)
        ones = blocks.D[:, 0]
        assert_allclose(ones @ blocks.B_loc @ ones, geom.area, rtol=1e-12)
        eigenvalues = np.linalg.eigvalsh(blocks.B_loc)
        norm = np.abs(eigenvalues).max()
        assert eigenvalues.min() >= -1e-12*norm
        assert np.sum(eigenvalues > 1e-10*norm) <= blocks.layout.n_k


def test_stabilization_scales_with_alpha():
    geom = element_geometry(HEXAGON)
    blocks = build_local_blocks(geom, 2)
    doubled = local_stiffness(blocks, blocks.moments, alpha=2.0)
    complement = np.eye(blocks.n_dofs) - blocks.Pnabla
    assert_allclose(doubled - blocks.A_loc, complement.T @ complement, atol=1e-12)
    for alpha in (0.0, -1.0, float('nan')):
        with raises(StabilizationParameterError):
            local_stiffness(blocks, blocks.moments, alpha=alpha)
