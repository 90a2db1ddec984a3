# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

"""
Rank of the mass matrix, the pencil A x = λ B x and the source problem.

B is only semidefinite. Its numerical kernel is found once, by splitting the
pivots (or banded eigenvalues) at their largest gap, and the pencil is solved
on the range of the resulting factor B ≈ W W^T: with A = L L^T the finite
eigenvalues are 1/ν for the eigenvalues ν of (L^-1 W)^T (L^-1 W). The kernel
table and the eigensolver therefore count the same kernel.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg
from scipy.sparse.csgraph import reverse_cuthill_mckee

from vemeig.assembly import DENSE_THRESHOLD, SparseSymmetric, VemSystem, extract_dense
from vemeig.helpers.quadrature import polygon_rule
from vemeig.polygeom import ScaledMonomialBasis, VemeigNumericalError

log = logging.getLogger(__name__)

PIVOTED_THRESHOLD = 2000
DENSE_EIG_THRESHOLD = PIVOTED_THRESHOLD
NEGATIVE_PIVOT_RTOL = 1e-10
KERNEL_WINDOW = 1e3
GAP_RATIO_WARN = 1e3
EPS = np.finfo(float).eps


class NotPositiveSemidefiniteError(VemeigNumericalError):
    """Exception raised for a mass matrix with a clearly negative pivot."""
    def __init__(self, pivot: float, index: int, threshold: float):
        self.pivot = pivot
        self.index = index
        self.message = (f'Matrix is not positive semidefinite: pivot {pivot:.3e} at step {index} '
                        f'is below {-threshold:.3e}')
        super().__init__(self.message)


class CoercivityError(VemeigNumericalError):
    """Exception raised when the stiffness matrix cannot be factorised."""
    def __init__(self, reason: str):
        self.message = f'Stiffness matrix is not positive definite: {reason}'
        super().__init__(self.message)


class PencilParameterError(ValueError):
    """Exception raised when more eigenvalues are requested than the pencil has."""
    def __init__(self, requested: int, available: int):
        self.requested = requested
        self.available = available
        self.message = f'Requested {requested} eigenvalues but only {available} finite eigenvalues exist'
        super().__init__(self.message)


MatrixLike = Union[SparseSymmetric, np.ndarray, sp.spmatrix]


def _as_symmetric(matrix: MatrixLike) -> SparseSymmetric:
    if isinstance(matrix, SparseSymmetric):
        return matrix
    return SparseSymmetric.from_matrix(matrix)


@dataclass(frozen=True, eq=False)
class CholeskyRank:
    """
    Numerical rank of a semidefinite matrix.

    smallest_kept is the last pivot (or eigenvalue) counted in the range and
    gap_ratio its ratio to the largest value assigned to the kernel. factor is
    the n x rank matrix W with B ≈ W W^T when it was requested.
    """
    n: int
    rank: int
    tolerance: float
    smallest_kept: float
    method: str
    gap_ratio: float = np.inf
    bandwidth: Optional[int] = None
    factor: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def zero_pivots(self) -> int:
        return self.n - self.rank


def split_kernel(values: np.ndarray, tol: float, window: float = KERNEL_WINDOW) -> tuple:
    """
    Split a nonincreasing sequence of pivots or eigenvalues into a range part
    and a kernel part at the largest ratio between neighbours.

    A split is admissible when the first dropped value is at most tol * window
    and the last kept value at least tol / window; values below tol / window
    are compared as tol / window. Returns (rank, gap ratio).
    """
    values = np.maximum(np.asarray(values, dtype=float), 0.0)
    n = len(values)
    if n == 0:
        return 0, np.inf
    floor = tol/window
    dropped = np.append(values, 0.0)
    kept = np.concatenate([[np.inf], values])
    gaps = kept/np.maximum(dropped, floor)
    admissible = (dropped <= tol*window) & (kept >= floor)
    if not admissible.any():
        return int((values > tol).sum()), 1.0
    gaps[~admissible] = 0.0
    rank = int(np.argmax(gaps))
    return rank, float(gaps[rank])


def _pivoted_cholesky(dense: np.ndarray, floor: float, neg_tol: float, with_factor: bool) -> tuple:
    """ Diagonal pivoting until the largest remaining pivot is below floor; returns (pivots, perm, L) """
    S = np.array(dense, dtype=float)
    n = len(S)
    pivots = np.zeros(n)
    perm = np.arange(n)
    L = np.zeros((n, n)) if with_factor else None
    for i in range(n):
        d = np.diagonal(S)[i:]
        j = i + int(np.argmax(d))
        pivot = S[j, j]
        if pivot <= floor:
            worst = float(d.min())
            if worst < -neg_tol:
                raise NotPositiveSemidefiniteError(worst, i, neg_tol)
            break
        if j != i:
            S[:, [i, j]] = S[:, [j, i]]
            S[[i, j], :] = S[[j, i], :]
            perm[[i, j]] = perm[[j, i]]
            if with_factor:
                L[[i, j], :i] = L[[j, i], :i]
        pivots[i] = pivot
        l = S[i + 1:, i]/np.sqrt(pivot)
        if with_factor:
            L[i, i] = np.sqrt(pivot)
            L[i + 1:, i] = l
        S[i + 1:, i + 1:] -= np.outer(l, l)
    return pivots, perm, L


def _banded_spectrum(matrix: sp.csr_matrix) -> tuple:
    """ Eigenvalues (descending) of a symmetric band matrix from its upper band storage """
    upper = sp.triu(matrix).tocoo()
    bandwidth = int((upper.col - upper.row).max()) if upper.nnz else 0
    band = np.zeros((bandwidth + 1, matrix.shape[0]))
    band[bandwidth + upper.row - upper.col, upper.col] = upper.data
    values = scipy.linalg.eigvals_banded(band, lower=False, overwrite_a_band=True)
    return values[::-1], bandwidth


def semidefinite_cholesky(B: MatrixLike, tol: Optional[float] = None, method: str = 'auto',
                          with_factor: bool = False) -> CholeskyRank:
    """
    Numerical rank of a symmetric positive semidefinite matrix. The rank is the
    split of split_kernel around tol (default n * eps * scale, scale the largest
    diagonal entry or eigenvalue).

    method: 'pivoted' (dense Cholesky with diagonal pivoting), 'banded' (reverse
    Cuthill-McKee ordering and the eigenvalues of the band matrix) or 'auto'
    (pivoted up to PIVOTED_THRESHOLD). with_factor returns W with B ≈ W W^T and
    needs the pivoted method.
    """
    B = _as_symmetric(B)
    n = B.n
    if n == 0:
        return CholeskyRank(n=0, rank=0, tolerance=0.0, smallest_kept=np.inf, method='empty',
                            factor=np.zeros((0, 0)) if with_factor else None)
    diag = B.diagonal()
    max_diag = float(diag.max())
    neg_tol = NEGATIVE_PIVOT_RTOL*max(abs(max_diag), float(np.abs(diag).max()))
    if diag.min() < -neg_tol:
        i = int(np.argmin(diag))
        raise NotPositiveSemidefiniteError(float(diag[i]), i, neg_tol)
    if max_diag <= 0.0:
        return CholeskyRank(n=n, rank=0, tolerance=0.0, smallest_kept=np.inf, method='zero',
                            factor=np.zeros((n, 0)) if with_factor else None)

    if method == 'auto':
        method = 'pivoted' if n <= PIVOTED_THRESHOLD or with_factor else 'banded'
    if method == 'pivoted':
        if tol is None:
            tol = n*EPS*max_diag
        pivots, perm, L = _pivoted_cholesky(extract_dense(B, DENSE_THRESHOLD), tol/KERNEL_WINDOW,
                                            neg_tol, with_factor)
        rank, gap = split_kernel(pivots, tol)
        factor = None
        if with_factor:
            factor = np.zeros((n, rank))
            factor[perm] = L[:, :rank]
        result = CholeskyRank(n=n, rank=rank, tolerance=tol, smallest_kept=float(pivots[rank - 1]) if rank else np.inf,
                              method=method, gap_ratio=gap, factor=factor)
    elif method == 'banded':
        if with_factor:
            raise ValueError('The banded method does not return a factor')
        full = B.full()
        perm = reverse_cuthill_mckee(full, symmetric_mode=True)
        values, bandwidth = _banded_spectrum(full[perm][:, perm].tocsr())
        neg_tol = NEGATIVE_PIVOT_RTOL*float(np.abs(values).max())
        if values[-1] < -neg_tol:
            raise NotPositiveSemidefiniteError(float(values[-1]), n - 1, neg_tol)
        if tol is None:
            tol = n*EPS*max(max_diag, float(values[0]))
        rank, gap = split_kernel(values, tol)
        result = CholeskyRank(n=n, rank=rank, tolerance=tol, smallest_kept=float(values[rank - 1]) if rank else np.inf,
                              method=method, gap_ratio=gap, bandwidth=bandwidth)
    else:
        raise ValueError(f'Unknown factorisation method {method!r}')
    log.debug(f'Semidefinite rank ({result.method}): n={n}, rank={result.rank}, tol={tol:.3e}, '
              f'gap={result.gap_ratio:.3e}')
    return result


def kernel_dimension(B: MatrixLike, tol: Optional[float] = None, method: str = 'auto') -> int:
    """ dim ker B = n - rank(B) """
    result = semidefinite_cholesky(B, tol=tol, method=method)
    return result.n - result.rank


@dataclass(frozen=True, eq=False)
class PencilSolution:
    """ Finite eigenvalues of A x = λ B x in ascending order """
    eigenvalues: np.ndarray
    kernel_dim: int
    n: int
    backend: str
    tolerance: float
    gap_ratio: float = np.inf
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)
    residuals: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_finite(self) -> int:
        return self.n - self.kernel_dim

    @property
    def over_pi2(self) -> np.ndarray:
        return self.eigenvalues/np.pi**2


def _residuals(A: SparseSymmetric, B: SparseSymmetric, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    AX = A.full() @ vectors
    BX = B.full() @ vectors
    return np.linalg.norm(AX - BX*values, axis=0)/np.linalg.norm(AX, axis=0)


def _check_gap(rank: CholeskyRank, gap_warn: float):
    if rank.zero_pivots and rank.gap_ratio < gap_warn:
        log.warning(f'Spectral gap ratio {rank.gap_ratio:.3e} around the kernel tolerance {rank.tolerance:.3e} '
                    f'is below {gap_warn:.0e}; the kernel count may be misclassified')


def _solve_dense(A: SparseSymmetric, B: SparseSymmetric, num_wanted, eigenvectors: bool, gap_warn: float):
    n = A.n
    try:
        L = scipy.linalg.cholesky(extract_dense(A), lower=True)
    except np.linalg.LinAlgError as err:
        raise CoercivityError(str(err)) from err
    rank = semidefinite_cholesky(B, method='pivoted', with_factor=True)
    _check_gap(rank, gap_warn)

    available = rank.rank
    count = available if num_wanted is None else num_wanted
    if count > available:
        raise PencilParameterError(count, available)
    vectors = residuals = None
    if available == 0:
        values = np.zeros(0)
        if eigenvectors:
            vectors, residuals = np.zeros((n, 0)), np.zeros(0)
    else:
        Z = scipy.linalg.solve_triangular(L, rank.factor, lower=True)
        C = Z.T @ Z
        C = 0.5*(C + C.T)
        if eigenvectors:
            nu, Y = scipy.linalg.eigh(C)
        else:
            nu, Y = scipy.linalg.eigh(C, eigvals_only=True), None
        order = np.arange(available)[::-1][:count]
        values = 1.0/nu[order]
        if eigenvectors:
            vectors = scipy.linalg.solve_triangular(L, Z @ Y[:, order], lower=True, trans='T')
            residuals = _residuals(A, B, values, vectors)
    return PencilSolution(eigenvalues=values, kernel_dim=rank.zero_pivots, n=n, backend='dense',
                          tolerance=rank.tolerance, gap_ratio=rank.gap_ratio, eigenvectors=vectors,
                          residuals=residuals)


def _solve_sparse(A: SparseSymmetric, B: SparseSymmetric, num_wanted, eigenvectors: bool, gap_warn: float):
    n = A.n
    rank = semidefinite_cholesky(B)
    _check_gap(rank, gap_warn)
    available = rank.rank
    count = 10 if num_wanted is None else num_wanted
    if count > available or count >= n:
        raise PencilParameterError(count, min(available, n - 1))
    v0 = np.random.default_rng(0).random(n)
    try:
        values, vectors = scipy.sparse.linalg.eigsh(A.full().tocsc(), k=count, M=B.full().tocsc(),
                                                    sigma=0.0, which='LM', v0=v0)
    except RuntimeError as err:
        raise CoercivityError(str(err)) from err
    order = np.argsort(values)
    values, vectors = values[order], vectors[:, order]
    residuals = _residuals(A, B, values, vectors) if eigenvectors else None
    return PencilSolution(eigenvalues=values, kernel_dim=rank.zero_pivots, n=n, backend='sparse',
                          tolerance=rank.tolerance, gap_ratio=rank.gap_ratio,
                          eigenvectors=vectors if eigenvectors else None, residuals=residuals)


def solve_pencil(A: MatrixLike, B: MatrixLike, num_wanted: Optional[int] = None, backend: str = 'auto',
                 eigenvectors: bool = False, dense_threshold: int = DENSE_EIG_THRESHOLD,
                 gap_warn: float = GAP_RATIO_WARN) -> PencilSolution:
    """
    Smallest finite eigenvalues of A x = λ B x, A SPD and B PSD.

    Both backends take the kernel count from semidefinite_cholesky, so it always
    equals kernel_dimension(B). The dense backend solves the pencil on the range
    of the pivoted factor of B; the sparse backend runs shift-invert Lanczos at
    σ = 0.
    """
    A, B = _as_symmetric(A), _as_symmetric(B)
    if A.n != B.n:
        raise ValueError(f'Pencil dimensions differ: {A.n} and {B.n}')
    if num_wanted is not None and num_wanted < 1:
        raise PencilParameterError(num_wanted, A.n)
    if backend == 'auto':
        backend = 'dense' if A.n <= dense_threshold else 'sparse'
    log.debug(f'Solving pencil of dimension {A.n} with the {backend} backend')
    if backend == 'dense':
        return _solve_dense(A, B, num_wanted, eigenvectors, gap_warn)
    if backend == 'sparse':
        return _solve_sparse(A, B, num_wanted, eigenvectors, gap_warn)
    raise ValueError(f'Unknown eigensolver backend {backend!r}')


class LoadBuilder:
    """ Right-hand side b_h(f, φ_i) = Σ_E (Π⁰f, Π⁰φ_i)_E on the interior DOFs of a VemSystem """
    def __init__(self, system: VemSystem, degree: Optional[int] = None):
        self.system = system
        self.degree = degree if degree is not None else 2*system.k + 4

    def _element_moments(self, c: int, f: Callable) -> np.ndarray:
        geom = self.system.geometries[c]
        points, weights = polygon_rule(geom.vertices, self.degree, apex=geom.centroid)
        basis = ScaledMonomialBasis.for_element(geom, self.system.k)
        values = np.broadcast_to(np.asarray(f(points[:, 0], points[:, 1]), dtype=float), weights.shape)
        return (weights*values) @ basis.evaluate(points)

    def __call__(self, f) -> np.ndarray:
        dofmap = self.system.dofmap
        if isinstance(f, np.ndarray) and f.ndim == 1:
            if len(f) != dofmap.n_interior:
                raise ValueError(f'Discrete data has {len(f)} entries, expected {dofmap.n_interior}')
            return self.system.B.matvec(f)

        load = np.zeros(dofmap.n_total)
        for c, block in enumerate(self.system.blocks):
            if callable(f):
                moments = self._element_moments(c, f)
            else:
                moments = float(f)*block.moments.H[0, :]
            np.add.at(load, dofmap.element_dofs[c], block.P0_star.T @ moments)
        return load[dofmap.interior_dofs]


def solve_source(A: MatrixLike, rhs_builder: LoadBuilder, f) -> np.ndarray:
    """ Interior DOFs of u_h with a_h(u_h, v_h) = b_h(f, v_h) """
    A = _as_symmetric(A)
    rhs = rhs_builder(f)
    if not np.any(rhs):
        return np.zeros(A.n)
    try:
        lu = scipy.sparse.linalg.splu(A.full().tocsc())
    except RuntimeError as err:
        raise CoercivityError(str(err)) from err
    u = lu.solve(rhs)
    if not np.all(np.isfinite(u)):
        raise CoercivityError('non finite solution of the source problem')
    return u


def lift(system: VemSystem, u: np.ndarray) -> np.ndarray:
    """ Interior DOF vector -> full DOF vector with zero boundary values """
    full = np.zeros(system.dofmap.n_total)
    full[system.dofmap.interior_dofs] = u
    return full


@dataclass(frozen=True)
class ProjectionErrors:
    h1: float
    l2: float


def projection_errors(system: VemSystem, u_full: np.ndarray, u_exact: Callable, grad_exact: Callable,
                      degree: Optional[int] = None) -> ProjectionErrors:
    """ Broken H1 seminorm error of Π∇u_h and L2 error of Π⁰u_h against a smooth solution """
    degree = degree if degree is not None else 2*system.k + 6
    h1_sq = l2_sq = 0.0
    for c, (geom, block) in enumerate(zip(system.geometries, system.blocks)):
        dofs = u_full[system.dofmap.element_dofs[c]]
        points, weights = polygon_rule(geom.vertices, degree, apex=geom.centroid)
        basis = ScaledMonomialBasis.for_element(geom, system.k)
        x, y = points[:, 0], points[:, 1]
        grad_pi = np.einsum("pka,k->pa", basis.gradient(points), block.Pnabla_star @ dofs)
        gx, gy = grad_exact(x, y)
        h1_sq += float(weights @ ((gx - grad_pi[:, 0])**2 + (gy - grad_pi[:, 1])**2))
        value_pi = basis.evaluate(points) @ (block.P0_star @ dofs)
        l2_sq += float(weights @ (u_exact(x, y) - value_pi)**2)
    return ProjectionErrors(h1=float(np.sqrt(h1_sq)), l2=float(np.sqrt(l2_sq)))
