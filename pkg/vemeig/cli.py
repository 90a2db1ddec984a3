# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

"""
Command line front-end.

Exit codes: 0 success, 1 usage/parameter/format error, 2 numerical failure.
"""

import argparse
import difflib
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from vemeig import __version__
from vemeig.assembly import CapacityError, assemble_system, write_matrix_market
from vemeig.eigensolve import kernel_dimension, solve_pencil
from vemeig.helpers import report_functions as rf
from vemeig.helpers.mesh_io import read_mesh, write_mesh
from vemeig.mesh import VoronoiGenerationError, mesh_stats
from vemeig.mesh_baseclasses import MeshFamily, MeshKind, MeshValidationError
from vemeig.polygeom import VemeigNumericalError
from vemeig.study import (PRESETS, ConfigError, StudyConfig, exact_eigenvalues_over_pi2, run_convergence,
                          run_kernel_study, run_source_study, spurious_modes)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2
DEGREES = [1, 2, 3, 4]
FAMILIES = [kind.value for kind in MeshKind]


class VemeigArgumentParser(argparse.ArgumentParser):
    """ ArgumentParser exiting with code 1 and suggesting the closest known flag """
    def _known_flags(self) -> List[str]:
        flags = []
        for action in self._actions:
            flags.extend(s for s in action.option_strings if s.startswith('--'))
            if isinstance(action, argparse._SubParsersAction):
                for sub in action.choices.values():
                    flags.extend(sub._known_flags())
        return sorted(set(flags))

    def error(self, message: str):
        self.print_usage(sys.stderr)
        hint = ''
        unknown = [token for token in message.replace(',', ' ').split() if token.startswith('--')]
        for token in unknown:
            match = difflib.get_close_matches(token.split('=')[0], self._known_flags(), n=1)
            if match:
                hint = f" (did you mean '{match[0]}'?)"
                break
        sys.stderr.write(f'{self.prog}: error: {message}{hint}\n')
        sys.exit(EXIT_USAGE)


def _int_list(text: str) -> list:
    return [item.strip() for item in text.split(',') if item.strip()]


def _degree_list(text: str) -> List[int]:
    try:
        degrees = [int(item) for item in _int_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f'invalid degree list {text!r}') from None
    if not degrees or any(k not in DEGREES for k in degrees):
        raise argparse.ArgumentTypeError(f'degrees must be in {DEGREES}, got {text!r}')
    return degrees


def build_parser() -> VemeigArgumentParser:
    parser = VemeigArgumentParser(prog='vemeig',
                                  description='Virtual element eigenvalue studies on polygonal meshes')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v for progress messages, -vv for debug output')
    parser.add_argument('--threads', type=int, default=None,
                        help='worker threads for levels and element loops (default: VEMEIG_THREADS or 1)')
    commands = parser.add_subparsers(dest='command', required=True, metavar='COMMAND')

    mesh = commands.add_parser('mesh', help='generate, validate or summarise meshes')
    mesh_commands = mesh.add_subparsers(dest='mesh_command', required=True, metavar='ACTION')
    gen = mesh_commands.add_parser('gen', help='generate a mesh and write it as JSON')
    gen.add_argument('--kind', choices=FAMILIES, required=True, help='mesh family')
    gen.add_argument('--n', type=int, required=True,
                     help='N for triangle/square/dyadic, P for voronoi, hexagons per row for hexagon')
    gen.add_argument('--m', type=int, default=None, help='hexagon rows (hexagon meshes only)')
    gen.add_argument('--seed', type=int, default=1, help='Voronoi seed (default 1)')
    gen.add_argument('--lloyd-iters', type=int, default=3, help='Voronoi Lloyd sweeps (default 3)')
    gen.add_argument('-o', '--output', required=True, help='output JSON file')
    validate = mesh_commands.add_parser('validate', help='check every mesh invariant of a JSON mesh')
    validate.add_argument('path', help='mesh file')
    stats = mesh_commands.add_parser('stats', help='print size and regularity statistics of a JSON mesh')
    stats.add_argument('path', help='mesh file')

    def add_family_arguments(sub, degrees_flag='--degree'):
        sub.add_argument('--family', choices=FAMILIES, help='mesh family')
        sub.add_argument('--levels', type=_int_list, help='comma separated levels, e.g. 4,8,16 or 8x10,18x20')
        sub.add_argument(degrees_flag, '--degrees', dest='degrees', type=_degree_list, default=None,
                         help='comma separated degrees k in 1..4')
        sub.add_argument('--alpha', type=float, default=None, help='stabilization parameter (default 1)')
        sub.add_argument('--seed', type=int, default=None, help='Voronoi seed (default 1)')
        sub.add_argument('--lloyd-iters', type=int, default=None, help='Voronoi Lloyd sweeps (default 3)')
        sub.add_argument('--preset', '--paper-table', dest='preset', choices=sorted(PRESETS), default=None,
                         help='use the family, levels and degrees of a published table')
        sub.add_argument('--large', action='store_true', help='allow runs above the dense threshold')
        sub.add_argument('--format', choices=['csv', 'md', 'markdown'], default='csv', help='output format')
        sub.add_argument('-o', '--output', default=None, help='write the report to a file instead of stdout')

    kernel = commands.add_parser('kernel', help='dimension of the kernel of the mass matrix')
    kernel.add_argument('--mesh', default=None, help='JSON mesh file instead of a family')
    add_family_arguments(kernel)

    study = commands.add_parser('study', help='eigenvalue errors and rates over refinement levels')
    add_family_arguments(study)
    study.add_argument('--num-eigs', type=int, default=10, help='number of eigenvalues (default 10)')
    study.add_argument('--backend', choices=['auto', 'dense', 'sparse'], default='auto', help='eigensolver')

    source = commands.add_parser('source', help='manufactured solution errors of the source problem')
    add_family_arguments(source)

    eig = commands.add_parser('eig', help='eigenvalues of the pencil on one mesh')
    eig.add_argument('--mesh', required=True, help='JSON mesh file')
    eig.add_argument('--degree', type=int, choices=DEGREES, required=True, help='polynomial degree k')
    eig.add_argument('--num-eigs', type=int, default=10, help='number of eigenvalues (default 10)')
    eig.add_argument('--alpha', type=float, default=1.0, help='stabilization parameter (default 1)')
    eig.add_argument('--backend', choices=['auto', 'dense', 'sparse'], default='auto', help='eigensolver')
    eig.add_argument('--export', default=None, metavar='PREFIX',
                     help='also write PREFIX_A.mtx and PREFIX_B.mtx in MatrixMarket format')
    eig.add_argument('-o', '--output', default=None, help='write the CSV to a file instead of stdout')
    return parser


def configure_logging(verbosity: int):
    level = logging.WARNING if verbosity <= 0 else (logging.INFO if verbosity == 1 else logging.DEBUG)
    logger = logging.getLogger('vemeig')
    for handler in list(logger.handlers):
        if getattr(handler, '_vemeig_cli', False):
            logger.removeHandler(handler)
    handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=False)
    handler._vemeig_cli = True
    logger.addHandler(handler)
    logger.setLevel(level)


def _emit(text: str, output: Optional[str]):
    if output:
        Path(output).write_text(text)
        log.info(f'Wrote {output}')
    else:
        sys.stdout.write(text)


def _study_config(args, **extra) -> StudyConfig:
    given = {'alpha': args.alpha, 'seed': args.seed, 'lloyd_iters': args.lloyd_iters}
    extra.update({name: value for name, value in given.items() if value is not None})
    if args.preset:
        config = replace(PRESETS[args.preset], output_format=args.format, large=args.large,
                         threads=args.threads, **extra)
        if args.degrees:
            config = replace(config, degrees=args.degrees)
        return config
    if args.family is None or args.levels is None:
        raise ConfigError('family', 'either --preset or both --family and --levels are required')
    return StudyConfig(family=args.family, levels=args.levels, degrees=args.degrees or [1],
                       output_format=args.format, threads=args.threads, large=args.large, **extra)


def _cmd_mesh(args, console: Console) -> int:
    if args.mesh_command == 'gen':
        kind = MeshKind(args.kind)
        if kind is MeshKind.HEXAGON:
            if args.m is None:
                raise ConfigError('m', 'hexagon meshes need --m')
            level = (args.n, args.m)
        else:
            level = args.n
        mesh = MeshFamily(kind, level, seed=args.seed, lloyd_iters=args.lloyd_iters).generate()
        write_mesh(mesh, args.output)
        console.print(f'{mesh.n_vertices} vertices, {mesh.n_cells} cells written to {args.output}')
        return EXIT_OK

    mesh = read_mesh(args.path)
    if args.mesh_command == 'validate':
        console.print(f'valid mesh: {mesh.n_vertices} vertices, {mesh.n_cells} cells')
        return EXIT_OK

    stats = mesh_stats(mesh)
    table = Table(title=str(args.path), show_header=False)
    table.add_row(f'{stats.n_vertices} vertices', f'{stats.n_boundary_vertices} on the boundary')
    table.add_row(f'{stats.n_edges} edges', '')
    table.add_row(f'{stats.n_cells} cells',
                  ', '.join(f'{count} with {edges} edges' for edges, count in stats.cell_edge_histogram.items()))
    table.add_row('h_max', f'{stats.h_max:.6g}')
    table.add_row('min h_e/h_E', f'{stats.min_edge_to_h:.6g}')
    table.add_row('min area', f'{stats.min_area:.6g}')
    console.print(table)
    return EXIT_OK


def _cmd_kernel(args, console: Console) -> int:
    if args.mesh:
        mesh = read_mesh(args.mesh)
        rows = []
        alpha = 1.0 if args.alpha is None else args.alpha
        for k in args.degrees or [1]:
            system = assemble_system(mesh, k, alpha, threads=args.threads)
            rows.append({'level': Path(args.mesh).stem, 'k': k,
                         'kernel_dim': kernel_dimension(system.B), 'dim_Vh': system.n_interior})
        frame = pd.DataFrame(rows, columns=rf.KERNEL_COLUMNS)
        text = rf.frame_to_csv(frame) if args.format == 'csv' else rf.kernel_markdown(args.mesh, 'mesh', frame)
    else:
        table = run_kernel_study(_study_config(args))
        text = table.to_csv() if args.format == 'csv' else table.to_markdown()
    _emit(text, args.output)
    return EXIT_OK


def _cmd_study(args, console: Console) -> int:
    config = _study_config(args, num_eigs=args.num_eigs, backend=args.backend)
    reports = run_convergence(config)
    if config.output_format == 'csv':
        text = rf.frame_to_csv(pd.concat([report.to_frame() for report in reports], ignore_index=True))
    else:
        text = '\n'.join(report.to_markdown() for report in reports)
    for report in reports:
        for label, values in zip(report.levels, report.spurious):
            if values:
                log.warning(f'{report.family} k={report.k} level {label}: unmatched eigenvalues {values}')
    _emit(text, args.output)
    return EXIT_OK


def _cmd_source(args, console: Console) -> int:
    config = _study_config(args)
    frame = run_source_study(config)
    text = rf.frame_to_csv(frame) if config.output_format == 'csv' else rf.frame_markdown(
        f'{config.family.value}: source problem errors', frame)
    _emit(text, args.output)
    return EXIT_OK


def _cmd_eig(args, console: Console) -> int:
    mesh = read_mesh(args.mesh)
    system = assemble_system(mesh, args.degree, args.alpha, threads=args.threads)
    if args.export:
        write_matrix_market(system.A, f'{args.export}_A.mtx', comment='VEM stiffness on interior DOFs')
        write_matrix_market(system.B, f'{args.export}_B.mtx', comment='VEM mass on interior DOFs')
    solution = solve_pencil(system.A, system.B, num_wanted=args.num_eigs, backend=args.backend)
    exact = exact_eigenvalues_over_pi2(args.num_eigs)
    computed = solution.over_pi2
    frame = pd.DataFrame({'index': np.arange(1, args.num_eigs + 1),
                          'exact_over_pi2': exact,
                          'computed_over_pi2': computed,
                          'abs_error_over_pi2': np.abs(computed - exact)})
    log.info(f'dim V_h = {solution.n}, dim K_b = {solution.kernel_dim}, backend {solution.backend}')
    unmatched = spurious_modes(computed)
    if unmatched:
        log.warning(f'Eigenvalues without an exact counterpart within 0.1: {unmatched}')
    _emit(rf.frame_to_csv(frame), args.output)
    return EXIT_OK


COMMANDS = {'mesh': _cmd_mesh, 'kernel': _cmd_kernel, 'study': _cmd_study, 'source': _cmd_source, 'eig': _cmd_eig}


def cli_main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (None, 0) else EXIT_USAGE
    configure_logging(args.verbose)
    console = Console(highlight=False)
    try:
        return COMMANDS[args.command](args, console)
    except (VemeigNumericalError, VoronoiGenerationError) as err:
        log.error(str(err))
        return EXIT_NUMERICAL
    except (ValueError, MeshValidationError, CapacityError, OSError) as err:
        log.error(str(err))
        return EXIT_USAGE


def main():
    sys.exit(cli_main())
