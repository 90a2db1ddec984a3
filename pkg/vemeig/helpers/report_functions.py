# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

from typing import List, Sequence

import numpy as np
import pandas as pd

SPECTRAL_COLUMNS = ['family', 'k', 'level', 'h', 'eig_index', 'exact_over_pi2', 'error_over_pi2',
                    'rate', 'kernel_dim', 'dim_Vh']
KERNEL_COLUMNS = ['level', 'k', 'kernel_dim', 'dim_Vh']
CSV_FLOAT_FORMAT = '%.17g'


def spectral_frame(family: str, k: int, levels: Sequence[str], h: np.ndarray, exact: np.ndarray,
                   errors: np.ndarray, rates: np.ndarray, kernel_dims: Sequence[int],
                   dims: Sequence[int]) -> pd.DataFrame:
    """ One row per (level, eigenvalue index), errors and rates of shape (n_levels, n_eigs) """
    n_levels, n_eigs = errors.shape
    df = pd.DataFrame()
    df['family'] = [family]*(n_levels*n_eigs)
    df['k'] = k
    df['level'] = np.repeat(list(levels), n_eigs)
    df['h'] = np.repeat(h, n_eigs)
    df['eig_index'] = np.tile(np.arange(1, n_eigs + 1), n_levels)
    df['exact_over_pi2'] = np.tile(exact, n_levels)
    df['error_over_pi2'] = errors.ravel()
    df['rate'] = rates.ravel()
    df['kernel_dim'] = np.repeat(kernel_dims, n_eigs)
    df['dim_Vh'] = np.repeat(dims, n_eigs)
    return df[SPECTRAL_COLUMNS]


def frame_to_csv(df: pd.DataFrame) -> str:
    return df.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, na_rep='', lineterminator='\n')


def format_exact(value: float) -> str:
    return f'{value:g}'


def format_error(error: float, rate: float, floor: float) -> str:
    cell = f'{error:.1e}'
    if error < floor:
        cell += '*'
    if np.isfinite(rate):
        cell += f' ({rate:.2f})'
    return cell


def markdown_table(header: List[str], rows: List[List[str]], align_right: bool = True) -> str:
    sep = '---:' if align_right else '---'
    lines = ['| ' + ' | '.join(header) + ' |',
             '|' + '|'.join([sep]*len(header)) + '|']
    lines.extend('| ' + ' | '.join(row) + ' |' for row in rows)
    return '\n'.join(lines) + '\n'


def errors_markdown(title: str, level_header: str, levels: Sequence[str], exact: np.ndarray,
                    errors: np.ndarray, rates: np.ndarray, floor: float) -> str:
    """ Errors (rate) table: one row per eigenvalue, one column per level """
    header = ['Exact'] + [f'{level_header}={level}' for level in levels]
    rows = []
    for i, value in enumerate(exact):
        rows.append([format_exact(value)] +
                    [format_error(errors[l, i], rates[l, i], floor) for l in range(len(levels))])
    text = f'**{title}: Errors (rate)**\n\n' + markdown_table(header, rows)
    if np.any(errors < floor):
        text += f'\n`*` error below the precision floor {floor:.0e}, rate not meaningful\n'
    return text


def kernel_markdown(title: str, level_header: str, df: pd.DataFrame) -> str:
    """ dim(K_b) (dim(V_h)) table: one row per level, one column per degree """
    degrees = sorted(df['k'].unique())
    levels = list(dict.fromkeys(df['level']))
    header = [level_header] + [f'k={k}' for k in degrees]
    rows = []
    for level in levels:
        row = [str(level)]
        for k in degrees:
            match = df[(df['level'] == level) & (df['k'] == k)]
            row.append('' if match.empty else f'{int(match.kernel_dim.iloc[0])} ({int(match.dim_Vh.iloc[0])})')
        rows.append(row)
    return f'**{title}: dim(K_b) (dim(V_h))**\n\n' + markdown_table(header, rows)


def frame_markdown(title: str, df: pd.DataFrame, float_format: str = '.3e') -> str:
    header = [str(c) for c in df.columns]
    rows = []
    for _, record in df.iterrows():
        cells = []
        for value in record:
            if isinstance(value, (float, np.floating)):
                cells.append('' if np.isnan(value) else format(value, float_format))
            else:
                cells.append(str(value))
        rows.append(cells)
    return f'**{title}**\n\n' + markdown_table(header, rows)
