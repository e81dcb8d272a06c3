"""The acceptance suite behind `verify-all`: one Check per property, each backed by a CSV."""
import logging
import pathlib
import typing as t

import numpy as np

from .catalog import CatalogEntry, load_catalog
from .datamodels import ChartPoint
from .deformations import (
    curvature_flow_value, euclidean_retraction, halfspace_retraction, normal_flow, search_overlap_tau, switch_side,
)
from .errors import DeformationError, ImmersipyError
from .exports import curvature_rows, homotopy_rows, jacobian_rows, write_csv
from .gaussmaps import (
    GaussKind, SphereMap, certify_single_signed, degree, designated_gauss, flat_gauss_derivative_residual,
    jacobian_field, orientation_class,
)
from .immersions import curvature_range, shape_data, shape_field
from .meshes import SphereMesh
from .spaceforms import BoundaryPoint, SpaceFormModel, christoffel, christoffel_from_metric
from .trackers import track

logger = logging.getLogger(__name__)

CLOSED_FORM_TOL = 1e-5
FLOW_TOL = 1e-6
DRIFT_TOL = 1e-6
FLAT_IDENTITY_TOL = 1e-5
CHRISTOFFEL_TOL = 1e-6
DEGREE_TOL = 0.1
FLOW_RADII = (0.1, 0.5, 1.0, 2.0, 4.0)
DEGREE_LEVELS = (3, 4, 5) # icosphere levels the rounded degree must agree across


class Check:
    """One verdict with the numbers behind it and the CSV that lets you recompute it."""
    name: str
    passed: bool
    metrics: dict
    artifact: str | None # file name inside the output directory
    def __init__(self, name: str, passed: bool, metrics: dict | None = None, artifact: str | None = None):
        self.name = name
        self.passed = bool(passed)
        self.metrics = dict(metrics or {})
        self.artifact = artifact
    @property
    def verdict(self) -> str:
        return 'PASS' if self.passed else 'FAIL'
    def as_json(self) -> dict:
        return {'name': self.name, 'verdict': self.verdict, 'metrics': self.metrics, 'artifact': self.artifact}
    def __repr__(self):
        return f'''<Check {self.name} {self.verdict}>'''


def _csv(out: pathlib.Path | None, name: str, columns, rows, header: dict | None = None) -> str | None:
    if out is None:
        return None
    filename = name.replace(':', '__') + '.csv'
    write_csv(out / filename, columns, rows, {'check': name, **(header or {})})
    return filename


def _failed(name: str, error: Exception) -> Check:
    logger.warning('%s failed: %s', name, error)
    return Check(name, False, {'error': str(error)})


def check_christoffel(rng: np.random.Generator, samples: int = 100, out: pathlib.Path | None = None) -> Check:
    """Half-space symbols against the closed form (+-1/x_N) and against the metric."""
    model = SpaceFormModel('HalfSpace', 3, 1.0)
    p = np.column_stack([rng.uniform(-2.0, 2.0, (samples, 2)), rng.uniform(0.2, 3.0, samples)])
    gamma = christoffel(model, p)
    closed = np.zeros_like(gamma)
    inv = 1.0 / p[:, -1]
    for i in range(2):
        closed[:, -1, i, i] = inv
        closed[:, i, i, -1] = -inv
        closed[:, i, -1, i] = -inv
    closed[:, -1, -1, -1] = -inv
    derived = christoffel_from_metric(model, p)
    closed_err = np.max(np.abs(gamma - closed), axis=(1, 2, 3))
    derived_err = np.max(np.abs(gamma - derived), axis=(1, 2, 3)) / (1.0 + np.max(np.abs(gamma), axis=(1, 2, 3)))
    rows = [[m, *p[m], closed_err[m], derived_err[m]] for m in range(samples)]
    artifact = _csv(out, 'christoffel', ['sample', 'x0', 'x1', 'x2', 'closed_form_error', 'metric_derived_error'], rows)
    passed = float(np.max(closed_err)) <= 1e-12 and float(np.max(derived_err)) <= CHRISTOFFEL_TOL
    return Check('christoffel', passed, {'closed_form_error': float(np.max(closed_err)), 'metric_derived_error': float(np.max(derived_err))}, artifact)


def check_catalog_entry(entry: CatalogEntry, mesh: SphereMesh, out: pathlib.Path | None = None) -> Check:
    """Sampled curvature range inside the manifest's expected band."""
    name = f'catalog:{entry.name}'
    try:
        f = entry.make()
        field = shape_field(f, mesh)
        found = curvature_range(f, mesh, entry.interval, field=field)
    except ImmersipyError as e:
        return _failed(name, e)
    lo, hi = entry.expected_lambda
    passed = lo - entry.tolerance <= found.lo and found.hi <= hi + entry.tolerance
    artifact = _csv(out, name, *curvature_rows(mesh, field), {'provenance': entry.provenance})
    metrics = {
        'lambda_min': found.lo, 'lambda_max': found.hi, 'expected': list(entry.expected_lambda),
        'tolerance': entry.tolerance, 'interval_margin': found.margin, 'in_interval': found.inside,
    }
    return Check(name, passed and bool(found.inside), metrics, artifact)


def check_degree(entry: CatalogEntry, mesh: SphereMesh, out: pathlib.Path | None = None) -> Check:
    name = f'degree:{entry.name}'
    try:
        sphere_map = designated_gauss(entry.make())
        field = jacobian_field(sphere_map, mesh)
        report = degree(sphere_map, mesh, field=field, strict=False)
    except ImmersipyError as e:
        return _failed(name, e)
    artifact = _csv(out, name, *jacobian_rows(field))
    passed = report.residual < DEGREE_TOL and report.rounded == entry.expected_degree
    return Check(name, passed, {'raw': report.raw, 'rounded': report.rounded, 'expected': entry.expected_degree, 'residual': report.residual}, artifact)


def check_degree_stability(entry: CatalogEntry, levels: t.Sequence[int] = DEGREE_LEVELS, out: pathlib.Path | None = None) -> Check:
    """The rounded degree of the designated Gauss map, once per mesh level; all must equal the expected one."""
    name = f'degree_levels:{entry.name}'
    rows = []
    try:
        sphere_map = designated_gauss(entry.make())
        for level in levels:
            report = degree(sphere_map, SphereMesh.icosphere(level), strict=False)
            rows.append([level, report.raw, report.rounded, report.residual])
    except ImmersipyError as e:
        return _failed(name, e)
    artifact = _csv(out, name, ['level', 'raw', 'rounded', 'residual'], rows)
    rounded = {level: r for level, _, r, _ in rows}
    passed = all(r == entry.expected_degree for r in rounded.values()) and max(row[3] for row in rows) < DEGREE_TOL
    return Check(name, passed, {'rounded': rounded, 'expected': entry.expected_degree, 'max_residual': max(row[3] for row in rows)}, artifact)


def check_single_signed(entry: CatalogEntry, mesh: SphereMesh, out: pathlib.Path | None = None) -> Check:
    """Disjoint-regime entries must PASS the sign certificate; negative controls must FAIL it."""
    name = f'single_signed:{entry.name}'
    try:
        f = entry.make()
        verdict = certify_single_signed(f, mesh)
    except ImmersipyError as e:
        return _failed(name, e)
    expected = 'FAIL' if entry.negative_control else 'PASS'
    rows = [[entry.name, verdict.kappa, verdict.lo, verdict.hi, verdict.side, verdict.verdict, expected]]
    artifact = _csv(out, name, ['entry', 'kappa', 'lambda_min', 'lambda_max', 'side', 'verdict', 'expected'], rows)
    return Check(name, verdict.verdict == expected, {**verdict.as_json(), 'expected': expected}, artifact)


def check_orientation(entry: CatalogEntry, mesh: SphereMesh, out: pathlib.Path | None = None) -> Check:
    """Jacobian sign of the designated Gauss map against the orientation rule (n = 2)."""
    name = f'orientation:{entry.name}'
    try:
        verdict = orientation_class(entry.make(), entry.interval, mesh)
    except ImmersipyError as e:
        return _failed(name, e)
    artifact = None if verdict.field is None else _csv(out, name, *jacobian_rows(verdict.field))
    observed = None if verdict.observed is None else verdict.observed.value
    metrics = {'predicted': verdict.predicted.value, 'observed': observed}
    if verdict.field is not None:
        metrics['min_abs_det'] = verdict.field.min_abs_det
    return Check(name, observed is None or observed == verdict.predicted.value, metrics, artifact)


def check_switch_side(entry: CatalogEntry, mesh: SphereMesh, out: pathlib.Path | None = None) -> Check:
    """f o rho has curvatures on the other side, and (n = 2) the same orientation class."""
    name = f'switch_side:{entry.name}'
    try:
        f = entry.make()
        before = orientation_class(f, entry.interval, mesh)
        g, flipped = switch_side(f, entry.interval)
        field = shape_field(g, mesh)
        found = curvature_range(g, mesh, flipped, field=field)
        after = orientation_class(g, flipped, mesh)
    except ImmersipyError as e:
        return _failed(name, e)
    artifact = _csv(out, name, *curvature_rows(mesh, field))
    passed = bool(found.inside) and before.observed == after.observed
    metrics = {
        'interval': str(flipped), 'lambda_min': found.lo, 'lambda_max': found.hi,
        'before': None if before.observed is None else before.observed.value,
        'after': None if after.observed is None else after.observed.value,
    }
    return Check(name, passed, metrics, artifact)


def check_flat_identity(entry: CatalogEntry, rng: np.random.Generator, samples: int = 100, out: pathlib.Path | None = None) -> Check:
    """d(nu_bar)(u) = ((nu_bar^N - lambda/kappa) / f^N) df(u) on random principal pairs."""
    name = f'flat_identity:{entry.name}'
    q = rng.standard_normal((samples, 3))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    rows = []
    worst = 0.0
    try:
        f = entry.make()
        for cp, idx in ChartPoint.cover(q):
            sd = shape_data(f, cp)
            for k in range(cp.n):
                residual = flat_gauss_derivative_residual(f, cp, sd.directions[:, :, k], sd.lambdas[:, k])
                worst = max(worst, float(np.max(residual)))
                rows.extend([int(i), k, sd.lambdas[m, k], residual[m]] for m, i in enumerate(idx))
    except ImmersipyError as e:
        return _failed(name, e)
    rows.sort()
    artifact = _csv(out, name, ['sample', 'direction', 'lambda', 'residual'], rows)
    return Check(name, worst <= FLAT_IDENTITY_TOL, {'max_residual': worst, 'pairs': len(rows)}, artifact)


def check_normal_flow(entry: CatalogEntry, mesh: SphereMesh, radii: t.Sequence[float] = FLOW_RADII, out: pathlib.Path | None = None) -> Check:
    """Curvature law and visual-Gauss invariance along the normal flow."""
    name = f'normal_flow:{entry.name}'
    rows = []
    worst_lambda = 0.0
    worst_drift = 0.0
    try:
        f = entry.make()
        kappa = f.model.kappa
        base = shape_field(f, mesh).lambdas
        visual = BoundaryPoint(SphereMap.gauss(f, GaussKind.VISUAL).sample(mesh))
        for r in radii:
            f_r = normal_flow(f, r, mesh)
            lam = shape_field(f_r, mesh).lambdas
            error = np.max(np.abs(lam - curvature_flow_value(base, r, kappa)), axis=-1)
            drift = visual.angle_to(BoundaryPoint(SphereMap.gauss(f_r, GaussKind.VISUAL).sample(mesh)))
            worst_lambda = max(worst_lambda, float(np.max(error)))
            worst_drift = max(worst_drift, float(np.max(drift)))
            rows.extend([r, v, lam[v, 0], lam[v, -1], error[v], drift[v]] for v in range(len(mesh)))
    except ImmersipyError as e:
        return _failed(name, e)
    artifact = _csv(out, name, ['r', 'vertex', 'lambda_min', 'lambda_max', 'law_error', 'drift'], rows)
    passed = worst_lambda <= FLOW_TOL and worst_drift <= DRIFT_TOL
    return Check(name, passed, {'max_law_error': worst_lambda, 'max_drift': worst_drift, 'radii': list(radii)}, artifact)


def check_retraction(entry: CatalogEntry, mu: float, mesh: SphereMesh, steps: int = 33, threads: int = 1, verbose: bool = False, out: pathlib.Path | None = None) -> Check:
    """Tracks the retraction of the entry's model; steps must stay in I, match the spectrum formula and keep the Gauss map."""
    name = f'retraction:{entry.name}'
    try:
        f = entry.make()
        if f.model.is_hyperbolic:
            path = halfspace_retraction(f, mu, entry.interval)
        else:
            path = euclidean_retraction(f, mu, entry.interval)
        report = track(path, mesh, steps, workers=threads, drift_tol=DRIFT_TOL, verbose=verbose)
    except ImmersipyError as e:
        return _failed(name, e)
    artifact = _csv(out, name, *homotopy_rows(report), {'kind': report.kind, 'mu': mu})
    residual = report.max_formula_residual
    passed = report.passed and residual is not None and residual <= CLOSED_FORM_TOL
    return Check(name, passed, report.as_json(), artifact)


def check_overlap(entry: CatalogEntry, mu: float, mesh: SphereMesh, steps: int = 33, threads: int = 1, verbose: bool = False, out: pathlib.Path | None = None) -> Check:
    name = f'overlap:{entry.name}'
    try:
        f = entry.make()
        tau, report = search_overlap_tau(f, mu, entry.interval, mesh, steps=steps, workers=threads, verbose=verbose)
    except DeformationError as e:
        rows = [[e.s, e.value, e.margin, str(e)]]
        artifact = _csv(out, name, ['s', 'lambda', 'margin', 'error'], rows)
        return Check(name, False, {'error': str(e)}, artifact)
    except ImmersipyError as e:
        return _failed(name, e)
    artifact = _csv(out, name, *homotopy_rows(report), {'tau': tau})
    return Check(name, report.passed, {'tau': tau, 'tau_k': report.params.get('tau_k'), **report.as_json()}, artifact)


def verify_all(
    mesh_level: int = 3,
    steps: int = 33,
    out: str | pathlib.Path | None = None,
    seed: int = 0,
    threads: int = 1,
    verbose: bool = False,
) -> t.List[Check]:
    """Runs every check on the shipped catalog at n = 2. Never raises for a failed property."""
    out = None if out is None else pathlib.Path(out)
    rng = np.random.default_rng(seed)
    mesh = SphereMesh.icosphere(mesh_level)
    catalog = load_catalog()
    checks = [check_christoffel(rng, out=out)]
    entries = [e for e in catalog if int(e.params.get('n', 2)) == 2]
    for i, entry in enumerate(entries):
        if verbose:
            print(f'''Verifying:{i + 1}/{len(entries)}:{entry.name}''')
        checks.append(check_catalog_entry(entry, mesh, out))
        if entry.expected_degree is not None:
            checks.append(check_degree(entry, mesh, out))
            checks.append(check_degree_stability(entry, out=out))
        if entry.disjoint or entry.negative_control:
            checks.append(check_single_signed(entry, mesh, out))
        if entry.disjoint:
            checks.append(check_orientation(entry, mesh, out))
    checks.append(check_switch_side(catalog['halfspace_sphere'], mesh, out))
    for name in ('halfspace_sphere', 'bumpy_halfspace_sphere'):
        checks.append(check_flat_identity(catalog[name], rng, out=out))
        checks.append(check_normal_flow(catalog[name], mesh, out=out))
    checks.append(check_normal_flow(catalog['bumpy_ball_sphere'], mesh, out=out))
    checks.append(check_retraction(catalog['bumpy_halfspace_sphere'], -2.0, mesh, steps, threads, verbose, out))
    checks.append(check_retraction(catalog['ellipsoid'], -1.0, mesh, steps, threads, verbose, out))
    checks.append(check_overlap(catalog['bumpy_ball_sphere'], -1.5, mesh, steps, threads, verbose, out))
    failed = [c.name for c in checks if not c.passed]
    logger.info('verify-all: %d checks, %d failed %s', len(checks), len(failed), failed if failed else '')
    return checks
