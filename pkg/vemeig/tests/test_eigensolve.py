"""
Module tests.test_eigensolve
------------------
:author: vemeig developers
This is a test module to test the mass matrix kernel, the generalized eigensolver and the source problem.
"""

import numpy as np
import scipy.linalg
from numpy.testing import assert_allclose
from pytest import mark, raises

from vemeig.assembly import assemble_system, extract_dense
from vemeig.eigensolve import (CoercivityError, LoadBuilder, NotPositiveSemidefiniteError, PencilParameterError,
                               kernel_dimension, lift, projection_errors, semidefinite_cholesky, solve_pencil,
                               solve_source, split_kernel)
from vemeig.mesh import generate_structured, generate_voronoi
from vemeig.mesh_baseclasses import MeshKind
from vemeig.study import manufactured_solution, spurious_modes


@mark.parametrize('N, expected',
                 [(4, [9, 42, 66, 90]),
                  (8, [49, 210, 322, 434]),
                 ])
def test_dyadic_kernel_dimensions(N, expected):
    mesh = generate_structured(MeshKind.DYADIC, N)
    for k, kernel in zip([1, 2, 3, 4], expected):
        system = assemble_system(mesh, k)
        assert kernel_dimension(system.B) == kernel


@mark.parametrize('k, expected', [(1, 225), (2, 930), (3, 1410), (4, 1890)])
def test_dyadic_kernel_dimensions_fine(k, expected):
    system = assemble_system(generate_structured(MeshKind.DYADIC, 16), k)
    assert kernel_dimension(system.B) == expected


@mark.parametrize('kind', [MeshKind.TRIANGLE, MeshKind.SQUARE])
@mark.parametrize('N', [4, 8, 16])
def test_structured_kernels_are_trivial(kind, N):
    mesh = generate_structured(kind, N)
    for k in (1, 2, 3, 4):
        assert kernel_dimension(assemble_system(mesh, k).B) == 0


@mark.slow
@mark.parametrize('kind', [MeshKind.TRIANGLE, MeshKind.SQUARE])
@mark.parametrize('k', [1, 2])
def test_structured_kernels_are_trivial_fine(kind, k):
    assert kernel_dimension(assemble_system(generate_structured(kind, 32), k).B) == 0


def test_hexagon_low_degree_kernels_are_trivial():
    mesh = generate_structured(MeshKind.HEXAGON, (8, 10))
    assert kernel_dimension(assemble_system(mesh, 1).B) == 0
    assert kernel_dimension(assemble_system(mesh, 2).B) == 0


def test_banded_and_pivoted_ranks_agree():
    B = assemble_system(generate_structured(MeshKind.DYADIC, 8), 2).B
    pivoted = semidefinite_cholesky(B, method='pivoted')
    banded = semidefinite_cholesky(B, method='banded')
    assert pivoted.rank == banded.rank == 449 - 210
    assert banded.bandwidth is not None and banded.bandwidth < B.n
    assert min(pivoted.gap_ratio, banded.gap_ratio) >= 1e3


def test_pivoted_factor_reproduces_matrix():
    B = assemble_system(generate_structured(MeshKind.DYADIC, 4), 3).B
    result = semidefinite_cholesky(B, with_factor=True)
    assert result.factor.shape == (177, 177 - 66)
    dense = extract_dense(B)
    assert_allclose(result.factor @ result.factor.T, dense, atol=1e-12*np.abs(dense).max())
    with raises(ValueError):
        semidefinite_cholesky(B, method='banded', with_factor=True)


def test_split_kernel_takes_the_largest_gap():
    eps = np.finfo(float).eps
    rank, gap = split_kernel([1.0, 0.5, 1e-3, 1e-17, 3e-18, 0.0], tol=6*eps)
    assert rank == 3
    assert gap == 1e-3/1e-17
    rank, gap = split_kernel([2.0, 1.0, 0.5], tol=3*eps)
    assert rank == 3 and gap > 1e12
    assert split_kernel([], tol=1.0) == (0, np.inf)


@mark.slow
@mark.parametrize('k', [3, 4])
def test_large_voronoi_mass_matrix_is_semidefinite(k):
    B = assemble_system(generate_voronoi(200), k).B
    assert B.n > 2000
    pivoted = semidefinite_cholesky(B, method='pivoted')
    banded = semidefinite_cholesky(B, method='banded')
    assert banded.rank == pivoted.rank
    assert kernel_dimension(B) == B.n - banded.rank


@mark.slow
def test_large_hexagon_kernel():
    B = assemble_system(generate_structured(MeshKind.HEXAGON, (18, 20)), 3).B
    assert B.n == 4043
    assert kernel_dimension(B) == 187


def test_kernel_is_permutation_invariant():
    B = assemble_system(generate_structured(MeshKind.DYADIC, 4), 3).B
    rng = np.random.default_rng(9)
    for _ in range(3):
        perm = rng.permutation(B.n)
        assert kernel_dimension(B.permuted(perm)) == 66


def test_kernel_dimension_simple_matrices():
    assert kernel_dimension(np.eye(7)) == 0
    assert kernel_dimension(np.zeros((5, 5))) == 5
    rng = np.random.default_rng(1)
    X = np.linalg.qr(rng.normal(size=(30, 30)))[0][:, :12]
    low_rank = X @ np.diag(rng.uniform(1.0, 2.0, 12)) @ X.T
    assert kernel_dimension(low_rank) == 18


def test_negative_pivot_raises():
    with raises(NotPositiveSemidefiniteError):
        kernel_dimension(np.diag([1.0, -1.0, 2.0]))
    with raises(NotPositiveSemidefiniteError):
        kernel_dimension(np.array([[1.0, 2.0], [2.0, 1.0]]))


def brute_force_finite_eigenvalues(A, B):
    mu = scipy.linalg.eigh(B, A, eigvals_only=True)
    mu = mu[mu > len(mu)*np.finfo(float).eps*mu.max()]
    return np.sort(1.0/mu)


@mark.parametrize('kind, N, k', [(MeshKind.SQUARE, 4, 2), (MeshKind.DYADIC, 4, 2), (MeshKind.TRIANGLE, 4, 3),
                                 (MeshKind.HEXAGON, (3, 4), 2)])
def test_dense_solver_matches_brute_force(kind, N, k):
    system = assemble_system(generate_structured(kind, N), k)
    assert system.n_interior <= 200
    solution = solve_pencil(system.A, system.B, backend='dense')
    oracle = brute_force_finite_eigenvalues(extract_dense(system.A), extract_dense(system.B))
    assert solution.kernel_dim == system.n_interior - len(oracle)
    assert len(solution.eigenvalues) == len(oracle)
    assert_allclose(solution.eigenvalues[:30], oracle[:30], rtol=1e-9)


def test_dense_solver_kernel_classification():
    system = assemble_system(generate_structured(MeshKind.DYADIC, 4), 2)
    solution = solve_pencil(system.A, system.B, num_wanted=10, eigenvectors=True)
    assert solution.backend == 'dense'
    assert solution.kernel_dim == 42
    assert solution.n_finite == 97 - 42
    assert solution.gap_ratio >= 1e3
    assert np.all(solution.residuals <= 1e-8)
    assert np.all(np.diff(solution.eigenvalues) >= 0.0)


def polygonal_mesh(kind, level):
    if kind is MeshKind.VORONOI:
        return generate_voronoi(level)
    return generate_structured(kind, level)


@mark.slow
@mark.parametrize('kind, level', [(MeshKind.VORONOI, 50), (MeshKind.VORONOI, 100), (MeshKind.VORONOI, 200),
                                   (MeshKind.HEXAGON, (8, 10))])
@mark.parametrize('k', [1, 2, 3, 4])
def test_pencil_kernel_matches_kernel_table(kind, level, k):
    system = assemble_system(polygonal_mesh(kind, level), k)
    kernel = kernel_dimension(system.B)
    solution = solve_pencil(system.A, system.B, num_wanted=16)
    assert solution.kernel_dim == kernel
    assert solution.n_finite == system.n_interior - kernel
    assert solution.gap_ratio >= 1e3
    if solution.backend == 'dense':
        spectrum = solve_pencil(system.A, system.B).over_pi2
        assert len(spectrum) == system.n_interior - kernel
        assert spectrum.max() < 1e10
    if k >= 2 and level in (200, (8, 10)):
        values = solution.over_pi2
        assert spurious_modes(values[values <= 20.0]) == []


def test_sparse_solver_matches_dense():
    system = assemble_system(generate_structured(MeshKind.DYADIC, 4), 2)
    dense = solve_pencil(system.A, system.B, num_wanted=8, backend='dense')
    sparse = solve_pencil(system.A, system.B, num_wanted=8, backend='sparse', eigenvectors=True)
    assert sparse.kernel_dim == dense.kernel_dim
    assert_allclose(sparse.eigenvalues, dense.eigenvalues, rtol=1e-8)
    assert np.all(sparse.residuals <= 1e-8)


def test_pencil_parameter_errors():
    system = assemble_system(generate_structured(MeshKind.SQUARE, 4), 1)
    with raises(PencilParameterError) as err:
        solve_pencil(system.A, system.B, num_wanted=10)
    assert err.value.available == 9
    with raises(PencilParameterError):
        solve_pencil(system.A, system.B, num_wanted=0)
    with raises(ValueError):
        solve_pencil(system.A, system.B, backend='lapack')


def test_indefinite_stiffness_raises():
    with raises(CoercivityError):
        solve_pencil(-np.eye(4), np.eye(4), backend='dense')


@mark.parametrize('N, expected, rtol', [(4, 3.2e-01, 0.02), (8, 7.8e-02, 0.02), (16, 1.9e-02, 0.02),
                                        (32, 4.8e-03, 0.02), (64, 1.2e-03, 0.01)])
def test_triangle_k1_first_eigenvalue_error(N, expected, rtol):
    system = assemble_system(generate_structured(MeshKind.TRIANGLE, N), 1)
    solution = solve_pencil(system.A, system.B, num_wanted=1)
    error = abs(solution.over_pi2[0] - 2.0)
    assert abs(error - expected) <= rtol*expected


@mark.parametrize('N, expected', [(8, 4.3e-05), (16, 2.6e-06)])
def test_square_k2_first_eigenvalue_error(N, expected):
    system = assemble_system(generate_structured(MeshKind.SQUARE, N), 2)
    solution = solve_pencil(system.A, system.B, num_wanted=1)
    error = abs(solution.over_pi2[0] - 2.0)
    assert expected/1.5 <= error <= 1.5*expected


def test_zero_source_gives_zero_solution():
    system = assemble_system(generate_structured(MeshKind.SQUARE, 4), 2)
    u = solve_source(system.A, LoadBuilder(system), 0.0)
    assert np.array_equal(u, np.zeros(system.n_interior))
    u = solve_source(system.A, LoadBuilder(system), lambda x, y: 0.0*x)
    assert not np.any(u)


def test_discrete_load_uses_mass_matrix():
    system = assemble_system(generate_structured(MeshKind.DYADIC, 2), 2)
    f = np.random.default_rng(4).normal(size=system.n_interior)
    assert_allclose(LoadBuilder(system)(f), system.B.matvec(f))
    with raises(ValueError):
        LoadBuilder(system)(np.ones(system.n_interior + 1))


def test_constant_load_matches_quadrature():
    system = assemble_system(generate_structured(MeshKind.SQUARE, 3), 2)
    builder = LoadBuilder(system)
    assert_allclose(builder(1.0), builder(lambda x, y: np.ones_like(x)), rtol=1e-12, atol=1e-15)


@mark.parametrize('k', [1, 2, 3])
def test_source_problem_rates(k):
    u, grad_u, f = manufactured_solution()
    levels = [8, 16, 32]
    h1, l2, h = [], [], []
    for N in levels:
        system = assemble_system(generate_structured(MeshKind.SQUARE, N), k)
        u_h = solve_source(system.A, LoadBuilder(system), f)
        errors = projection_errors(system, lift(system, u_h), u, grad_u)
        h1.append(errors.h1)
        l2.append(errors.l2)
        h.append(system.mesh.h_max)
    rates = np.log(np.array(h1[:-1])/np.array(h1[1:]))/np.log(np.array(h[:-1])/np.array(h[1:]))
    assert np.all(np.abs(rates - k) <= 0.2)
    l2_rates = np.log(np.array(l2[:-1])/np.array(l2[1:]))/np.log(np.array(h[:-1])/np.array(h[1:]))
    assert np.all(l2_rates >= k + 0.7)
