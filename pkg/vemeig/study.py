# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

"""
Kernel and eigenvalue convergence studies over a refinement sequence of one
mesh family, plus the manufactured-solution source study.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from vemeig.assembly import DENSE_THRESHOLD, assemble_system, build_dofmap, resolve_threads
from vemeig.eigensolve import (DENSE_EIG_THRESHOLD, LoadBuilder, kernel_dimension, lift,
                               projection_errors, solve_pencil, solve_source)
from vemeig.helpers import report_functions as rf
from vemeig.mesh_baseclasses import MeshFamily, MeshKind, PolygonalMesh, parse_level

log = logging.getLogger(__name__)

PRECISION_FLOOR = 1e-11
SPURIOUS_WINDOW = (0.0, 20.0)
SPURIOUS_ATOL = 0.1
SUPPORTED_DEGREES = (1, 2, 3, 4)
OUTPUT_FORMATS = {'csv': 'csv', 'markdown': 'markdown', 'md': 'markdown'}
LEVEL_HEADERS = {MeshKind.TRIANGLE: 'N', MeshKind.SQUARE: 'N', MeshKind.DYADIC: 'N',
                 MeshKind.VORONOI: 'P', MeshKind.HEXAGON: 'n x m'}


class ConfigError(ValueError):
    """Exception raised for an invalid study configuration."""
    def __init__(self, name: str, reason: str):
        self.field = name
        self.message = f'Invalid study configuration, {name}: {reason}'
        super().__init__(self.message)


@dataclass
class StudyConfig:
    """ Mesh family, refinement levels and degrees of one study """
    family: MeshKind
    levels: list
    degrees: list
    num_eigs: int = 10
    alpha: float = 1.0
    seed: int = 1
    lloyd_iters: int = 3
    output_format: str = 'csv'
    backend: str = 'auto'
    threads: Optional[int] = None
    large: bool = False

    def __post_init__(self):
        try:
            self.family = MeshKind(self.family)
        except ValueError:
            raise ConfigError('family', f'unknown mesh family {self.family!r}') from None
        if not self.levels:
            raise ConfigError('levels', 'at least one level is required')
        levels = []
        for level in self.levels:
            if isinstance(level, str):
                level = parse_level(self.family, level)
            if self.family is MeshKind.HEXAGON:
                level = tuple(int(v) for v in level)
            levels.append(level)
        self.levels = levels
        keys = [self._level_key(level) for level in levels]
        if any(b <= a for a, b in zip(keys, keys[1:])):
            raise ConfigError('levels', f'must be strictly increasing, got {self.labels}')
        for level in levels:
            self.family_member(level)

        self.degrees = [int(k) for k in self.degrees]
        if not self.degrees or any(k not in SUPPORTED_DEGREES for k in self.degrees):
            raise ConfigError('degrees', f'must be a non empty subset of {SUPPORTED_DEGREES}, got {self.degrees}')
        if self.num_eigs < 1:
            raise ConfigError('num_eigs', f'must be positive, got {self.num_eigs}')
        if not self.alpha > 0:
            raise ConfigError('alpha', f'must be positive, got {self.alpha}')
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError('output_format', f'expected one of {sorted(OUTPUT_FORMATS)}, got {self.output_format!r}')
        self.output_format = OUTPUT_FORMATS[self.output_format]
        if self.backend not in ('auto', 'dense', 'sparse'):
            raise ConfigError('backend', f'expected auto, dense or sparse, got {self.backend!r}')

    def _level_key(self, level):
        return level[1] if self.family is MeshKind.HEXAGON else level

    def family_member(self, level) -> MeshFamily:
        try:
            return MeshFamily(self.family, level, seed=self.seed, lloyd_iters=self.lloyd_iters)
        except ValueError as err:
            raise ConfigError('levels', str(err)) from err

    @property
    def labels(self) -> List[str]:
        return [f'{l[0]}x{l[1]}' if isinstance(l, tuple) else str(l) for l in self.levels]

    @property
    def level_header(self) -> str:
        return LEVEL_HEADERS[self.family]

    def check_size(self, mesh: PolygonalMesh, k: int, label: str):
        """ Refuse runs above the dense threshold unless large runs are enabled """
        n = build_dofmap(mesh, k).n_interior
        if n > DENSE_THRESHOLD and not self.large:
            raise ConfigError('large', f'{self.family.value} level {label}, k={k} has {n} interior DOFs, '
                                       f'above {DENSE_THRESHOLD}; pass --large to run it')


def exact_eigenvalues_over_pi2(count: int) -> np.ndarray:
    """ First count values of i^2 + j^2, i, j >= 1, with multiplicity """
    radius = 2*int(np.ceil(np.sqrt(count))) + 2
    i, j = np.meshgrid(np.arange(1, radius + 1), np.arange(1, radius + 1))
    values = (i**2 + j**2).ravel()
    values = np.sort(values[values <= radius**2])
    return values[:count].astype(float)


def convergence_rates(errors: np.ndarray, h: np.ndarray) -> np.ndarray:
    """ log(e_prev/e)/log(h_prev/h) along the first axis, NaN at the first level """
    errors = np.asarray(errors, dtype=float)
    h = np.asarray(h, dtype=float)
    rates = np.full(errors.shape, np.nan)
    if len(h) > 1:
        ratio_h = np.log(h[:-1]/h[1:])
        if errors.ndim > 1:
            ratio_h = ratio_h.reshape((-1,) + (1,)*(errors.ndim - 1))
        with np.errstate(divide='ignore', invalid='ignore'):
            rates[1:] = np.log(errors[:-1]/errors[1:])/ratio_h
    return rates


def spurious_modes(values_over_pi2: Sequence[float], window: Tuple[float, float] = SPURIOUS_WINDOW,
                   atol: float = SPURIOUS_ATOL, rtol: float = 0.0) -> List[float]:
    """ Computed values in the window with no exact i^2 + j^2 within max(atol, rtol * exact) """
    values = np.asarray(values_over_pi2, dtype=float)
    lo, hi = window
    limit = int(np.ceil(np.sqrt(hi*(1.0 + rtol) + atol))) + 1
    candidates = np.unique([i*i + j*j for i in range(1, limit + 1) for j in range(1, limit + 1)]).astype(float)
    spurious = []
    for value in values[(values >= lo) & (values <= hi)]:
        tolerance = np.maximum(atol, rtol*candidates)
        if not np.any(np.abs(candidates - value) <= tolerance):
            spurious.append(float(value))
    return spurious


@dataclass
class SpectralReport:
    """ Errors and rates of the first eigenvalues of one family and degree over the levels """
    family: str
    k: int
    level_header: str
    levels: List[str]
    h: np.ndarray
    exact: np.ndarray
    computed: np.ndarray
    kernel_dims: List[int]
    dims: List[int]
    spurious: List[List[float]] = field(default_factory=list)
    floor: float = PRECISION_FLOOR

    @property
    def errors(self) -> np.ndarray:
        return np.abs(self.computed - self.exact[None, :])

    @property
    def rates(self) -> np.ndarray:
        return convergence_rates(self.errors, self.h)

    @property
    def floor_mask(self) -> np.ndarray:
        return self.errors < self.floor

    def to_frame(self) -> pd.DataFrame:
        return rf.spectral_frame(self.family, self.k, self.levels, self.h, self.exact,
                                 self.errors, self.rates, self.kernel_dims, self.dims)

    def to_csv(self) -> str:
        return rf.frame_to_csv(self.to_frame())

    def to_markdown(self) -> str:
        title = f'{self.family}, k={self.k}'
        return rf.errors_markdown(title, self.level_header, self.levels, self.exact,
                                  self.errors, self.rates, self.floor)


@dataclass
class KernelTable:
    """ dim K_b and dim V_h per level and degree """
    family: str
    level_header: str
    frame: pd.DataFrame

    def kernel_dim(self, level: str, k: int) -> int:
        match = self.frame[(self.frame['level'] == str(level)) & (self.frame['k'] == k)]
        return int(match.kernel_dim.iloc[0])

    def to_csv(self) -> str:
        return rf.frame_to_csv(self.frame)

    def to_markdown(self) -> str:
        return rf.kernel_markdown(self.family, self.level_header, self.frame)


def _map_levels(config: StudyConfig, work):
    """ Apply work(level, label) to every level, concurrently when threads allow; results in level order """
    items = list(zip(config.levels, config.labels))
    workers = min(resolve_threads(config.threads), len(items))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda item: work(*item), items))
    return [work(*item) for item in items]


def run_kernel_study(config: StudyConfig, method: str = 'auto') -> KernelTable:
    """ dim K_b (dim V_h) for every level and degree of the config """
    def work(level, label):
        mesh = config.family_member(level).generate()
        rows = []
        for k in config.degrees:
            config.check_size(mesh, k, label)
            system = assemble_system(mesh, k, config.alpha, threads=1)
            kernel = kernel_dimension(system.B, method=method)
            log.info(f'{config.family.value} {label} k={k}: dim K_b = {kernel}, dim V_h = {system.n_interior}')
            rows.append({'level': label, 'k': k, 'kernel_dim': kernel, 'dim_Vh': system.n_interior})
        return rows

    rows = [row for level_rows in _map_levels(config, work) for row in level_rows]
    frame = pd.DataFrame(rows, columns=rf.KERNEL_COLUMNS)
    frame = frame.sort_values(['k'], kind='stable').reset_index(drop=True)
    return KernelTable(family=config.family.value, level_header=config.level_header, frame=frame)


def _level_spectrum(config: StudyConfig, level, label: str) -> Dict[int, dict]:
    mesh = config.family_member(level).generate()
    results = {}
    for k in config.degrees:
        config.check_size(mesh, k, label)
        system = assemble_system(mesh, k, config.alpha, threads=1)
        backend = config.backend
        if backend == 'auto':
            backend = 'dense' if system.n_interior <= DENSE_EIG_THRESHOLD else 'sparse'
        wanted = None if backend == 'dense' else config.num_eigs
        solution = solve_pencil(system.A, system.B, num_wanted=wanted, backend=backend)
        if solution.n_finite < config.num_eigs:
            raise ConfigError('num_eigs', f'{config.num_eigs} requested but {label}, k={k} '
                                          f'has only {solution.n_finite} finite eigenvalues')
        values = solution.over_pi2
        window = values[values <= SPURIOUS_WINDOW[1]]
        log.info(f'{config.family.value} {label} k={k}: h={mesh.h_max:.4g}, dim V_h={system.n_interior}, '
                 f'dim K_b={solution.kernel_dim}, lambda_1/pi^2={values[0]:.12g}')
        results[k] = {'h': mesh.h_max,
                      'values': values[:config.num_eigs],
                      'kernel_dim': solution.kernel_dim,
                      'dim': system.n_interior,
                      'spurious': spurious_modes(window)}
    return results


def run_convergence(config: StudyConfig) -> List[SpectralReport]:
    """ One SpectralReport per degree, first num_eigs eigenvalues over all levels """
    per_level = _map_levels(config, lambda level, label: _level_spectrum(config, level, label))
    exact = exact_eigenvalues_over_pi2(config.num_eigs)
    reports = []
    for k in config.degrees:
        data = [level_results[k] for level_results in per_level]
        reports.append(SpectralReport(family=config.family.value,
                                      k=k,
                                      level_header=config.level_header,
                                      levels=config.labels,
                                      h=np.array([d['h'] for d in data]),
                                      exact=exact,
                                      computed=np.vstack([d['values'] for d in data]),
                                      kernel_dims=[d['kernel_dim'] for d in data],
                                      dims=[d['dim'] for d in data],
                                      spurious=[d['spurious'] for d in data]))
    return reports


def manufactured_solution():
    """ u = sin(πx) sin(πy) with f = -Δu = 2π² u """
    def u(x, y):
        return np.sin(np.pi*x)*np.sin(np.pi*y)

    def grad_u(x, y):
        return (np.pi*np.cos(np.pi*x)*np.sin(np.pi*y), np.pi*np.sin(np.pi*x)*np.cos(np.pi*y))

    def f(x, y):
        return 2.0*np.pi**2*u(x, y)

    return u, grad_u, f


def run_source_study(config: StudyConfig) -> pd.DataFrame:
    """ H1 error of Π∇u_h and L2 error of Π⁰u_h for the manufactured solution, with rates """
    u, grad_u, f = manufactured_solution()

    def work(level, label):
        mesh = config.family_member(level).generate()
        rows = []
        for k in config.degrees:
            config.check_size(mesh, k, label)
            system = assemble_system(mesh, k, config.alpha, threads=1)
            u_h = solve_source(system.A, LoadBuilder(system), f)
            errors = projection_errors(system, lift(system, u_h), u, grad_u)
            log.info(f'source {config.family.value} {label} k={k}: H1 {errors.h1:.3e}, L2 {errors.l2:.3e}')
            rows.append({'family': config.family.value, 'k': k, 'level': label, 'h': mesh.h_max,
                         'dim_Vh': system.n_interior, 'h1_error': errors.h1, 'l2_error': errors.l2})
        return rows

    frame = pd.DataFrame([row for rows in _map_levels(config, work) for row in rows])
    frame = frame.sort_values(['k'], kind='stable').reset_index(drop=True)
    frame['h1_rate'] = np.nan
    frame['l2_rate'] = np.nan
    for k in config.degrees:
        sel = frame['k'] == k
        frame.loc[sel, 'h1_rate'] = convergence_rates(frame.loc[sel, 'h1_error'].to_numpy(), frame.loc[sel, 'h'].to_numpy())
        frame.loc[sel, 'l2_rate'] = convergence_rates(frame.loc[sel, 'l2_error'].to_numpy(), frame.loc[sel, 'h'].to_numpy())
    return frame


def _presets() -> Dict[str, StudyConfig]:
    structured = [4, 8, 16, 32, 64]
    voronoi = [50, 100, 200, 400, 800]
    hexagon = [(8, 10), (18, 20), (26, 30), (34, 40), (44, 50)]
    hexagon_kernel = hexagon + [(52, 60), (60, 70), (70, 80)]
    families = {'T': (MeshKind.TRIANGLE, structured, structured),
                'S': (MeshKind.SQUARE, structured, structured),
                'V': (MeshKind.VORONOI, voronoi, voronoi),
                'H': (MeshKind.HEXAGON, hexagon, hexagon_kernel),
                'D': (MeshKind.DYADIC, structured, structured)}
    tables = {}
    for symbol, (kind, levels, kernel_levels) in families.items():
        tables[f'kernel{symbol}'] = StudyConfig(kind, list(kernel_levels), [1, 2, 3, 4])
        for k in SUPPORTED_DEGREES:
            tables[f'{symbol.lower()}k{k}'] = StudyConfig(kind, list(levels), [k])
    return tables


PRESETS = _presets()
