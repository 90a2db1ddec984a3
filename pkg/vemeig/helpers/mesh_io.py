# copyright #################################### #
# This file is part of the vemeig Package.       #
# ############################################## #

import json
import logging
import math
from pathlib import Path
from typing import Union

from vemeig.mesh_baseclasses import PolygonalMesh

log = logging.getLogger(__name__)

MESH_FORMAT = 'vemeig-mesh'
MESH_VERSION = 1


class MeshFormatError(ValueError):
    """Exception raised for mesh files that cannot be parsed."""
    def __init__(self, path, reason: str, line: int = None, field: str = None):
        self.path = str(path)
        self.line = line
        self.field = field
        where = f'line {line}' if line is not None else (f'field {field}' if field is not None else 'file')
        self.message = f'Malformed mesh file {self.path} ({where}): {reason}'
        super().__init__(self.message)


def write_mesh(mesh: PolygonalMesh, path: Union[str, Path]):
    """ Write a mesh as JSON; floats are written with repr so reading back is exact """
    data = {'format': MESH_FORMAT,
            'version': MESH_VERSION,
            'vertices': [[float(x), float(y)] for x, y in mesh.vertices],
            'cells': [list(cell) for cell in mesh.cells]}
    with open(path, 'w') as f:
        json.dump(data, f)
        f.write('\n')
    log.info(f'Wrote mesh with {mesh.n_vertices} vertices and {mesh.n_cells} cells to {path}')


def _read_point(path, i, point):
    if not isinstance(point, list) or len(point) != 2:
        raise MeshFormatError(path, 'expected an [x, y] pair', field=f'vertices[{i}]')
    for j, value in enumerate(point):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise MeshFormatError(path, f'not a finite number: {value!r}', field=f'vertices[{i}][{j}]')
    return float(point[0]), float(point[1])


def _read_cell(path, i, cell):
    if not isinstance(cell, list):
        raise MeshFormatError(path, 'expected a list of vertex indices', field=f'cells[{i}]')
    for j, value in enumerate(cell):
        if isinstance(value, bool) or not isinstance(value, int):
            raise MeshFormatError(path, f'not an integer index: {value!r}', field=f'cells[{i}][{j}]')
    return cell


def read_mesh(path: Union[str, Path], validate: bool = True) -> PolygonalMesh:
    """ Read a JSON mesh file; boundary flags are derived, invariants checked unless validate=False """
    try:
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as err:
        raise MeshFormatError(path, err.msg, line=err.lineno) from err
    except UnicodeDecodeError as err:
        raise MeshFormatError(path, f'not UTF-8 text: {err.reason} at byte {err.start}') from err

    if not isinstance(data, dict):
        raise MeshFormatError(path, 'top level must be an object')
    if data.get('format') != MESH_FORMAT:
        raise MeshFormatError(path, f'expected "{MESH_FORMAT}", got {data.get("format")!r}', field='format')
    if data.get('version') != MESH_VERSION:
        raise MeshFormatError(path, f'unsupported version {data.get("version")!r}', field='version')
    for key in ('vertices', 'cells'):
        if not isinstance(data.get(key), list):
            raise MeshFormatError(path, 'missing or not a list', field=key)

    vertices = [_read_point(path, i, p) for i, p in enumerate(data['vertices'])]
    cells = [_read_cell(path, i, c) for i, c in enumerate(data['cells'])]
    return PolygonalMesh.from_arrays(vertices, cells, validate=validate)
