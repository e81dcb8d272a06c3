"""CSV, JSON and OBJ artifacts.

CSV files start with `# key=value` provenance lines, the first being the
column-set version, then a header row. JSON summaries round floats to 1e-9
so that reruns of the same config compare equal byte for byte.
"""
import csv
import json
import logging
import math
import pathlib
import typing as t

import numpy as np

from .errors import DomainError
from .gaussmaps import JacobianField
from .immersions import ShapeField
from .meshes import SphereMesh
from .trackers import HomotopyReport

logger = logging.getLogger(__name__)

CSV_VERSION = 1
SUMMARY_DIGITS = 9


def write_csv(path: str | pathlib.Path, columns: t.Sequence[str], rows: t.Iterable[t.Sequence], header: dict | None = None) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as fh:
        fh.write(f'# immersipy_csv_version={CSV_VERSION}\n')
        for k, v in (header or {}).items():
            fh.write(f'# {k}={v}\n')
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    logger.debug('wrote %s', path)
    return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    if v is None:
        return ''
    return v


def curvature_rows(mesh: SphereMesh, field: ShapeField) -> t.Tuple[t.List[str], t.List[list]]:
    """One row per vertex: sphere point, principal curvatures, Gaussian curvature, immersivity margin."""
    N = mesh.n + 1
    n = mesh.n
    columns = ['vertex'] + [f'q{i}' for i in range(N)] + [f'lambda_{i + 1}' for i in range(n)] + ['gaussian', 'sigma_min']
    K = field.gaussian
    rows = [
        [v, *mesh.vertices[v], *field.lambdas[v], K[v], field.sigma_min[v]]
        for v in range(len(mesh))
    ]
    return columns, rows


def jacobian_rows(field: JacobianField) -> t.Tuple[t.List[str], t.List[list]]:
    mesh = field.mesh
    N = mesh.n + 1
    columns = ['vertex'] + [f'q{i}' for i in range(N)] + [f'image{i}' for i in range(N)] + ['weight', 'det']
    rows = [
        [v, *mesh.vertices[v], *field.images[v], mesh.weights[v], field.dets[v]]
        for v in range(len(mesh))
    ]
    return columns, rows


HOMOTOPY_COLUMNS = ['s', 'immersion', 'lambda_min', 'lambda_max', 'sigma_min', 'margin', 'inside', 'drift', 'formula_residual', 'hypothesis', 'error']


def homotopy_rows(report: HomotopyReport) -> t.Tuple[t.List[str], t.List[list]]:
    rows = []
    for record in report.records():
        data = record.as_json()
        rows.append([data[c] for c in HOMOTOPY_COLUMNS])
    return list(HOMOTOPY_COLUMNS), rows


def round_floats(obj, digits: int = SUMMARY_DIGITS):
    """Recursively rounds floats; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        x = round(x, digits)
        return 0.0 if x == 0.0 else x
    return obj


def write_summary(path: str | pathlib.Path, summary: dict) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8') as fh:
        json.dump(round_floats(summary), fh, indent=2, sort_keys=True)
        fh.write('\n')
    logger.debug('wrote %s', path)
    return path


def write_obj(path: str | pathlib.Path, mesh: SphereMesh, positions=None, attributes: t.Dict[str, np.ndarray] | None = None) -> pathlib.Path:
    """Wavefront OBJ of an icosphere (or its image under an immersion into R^3).

    Per-vertex scalars go in `#a` comment lines after each vertex, in the
    order named by the `# attributes` line."""
    if mesh.faces is None or mesh.n != 2:
        raise DomainError('OBJ export needs an icosphere mesh of S^2')
    positions = mesh.vertices if positions is None else np.asarray(positions, dtype=float)
    if positions.shape != mesh.vertices.shape:
        raise DomainError(f'OBJ positions must have shape {mesh.vertices.shape}, got {positions.shape}')
    attributes = {k: np.asarray(v, dtype=float).reshape(len(mesh), -1) for k, v in (attributes or {}).items()}
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8') as fh:
        fh.write(f'# immersipy_obj_version={CSV_VERSION}\n')
        names = [f'{k}[{i}]' if a.shape[1] > 1 else k for k, a in attributes.items() for i in range(a.shape[1])]
        if names:
            fh.write(f'# attributes {" ".join(names)}\n')
        for v in range(len(mesh)):
            fh.write('v {:.12g} {:.12g} {:.12g}\n'.format(*positions[v]))
            if names:
                values = np.concatenate([a[v] for a in attributes.values()])
                fh.write('#a ' + ' '.join(f'{x:.12g}' for x in values) + '\n')
        for a, b, c in mesh.faces:
            fh.write(f'f {a + 1} {b + 1} {c + 1}\n')
    logger.debug('wrote %s', path)
    return path
