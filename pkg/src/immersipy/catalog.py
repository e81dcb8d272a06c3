"""Closed-form immersed spheres with exact jets, and the manifest describing them.

Instantiate like this:
make('inclusion')
make('bumpy_sphere', eps=0.05, model='Ball')
make('halfspace_sphere_above') # a named manifest entry with its own defaults
"""
import json
import logging
import math
import pathlib
import typing as t

import numpy as np
from rapidfuzz import process

from .datamodels import CurvatureInterval, Immersion, IntervalClass, antipodal, reflection
from .deformations import round_sphere
from .errors import CatalogError, DomainError
from .immersions import compose_with_diffeo, curvature_range
from .meshes import SphereMesh
from .spaceforms import ModelKind, SpaceFormModel

logger = logging.getLogger(__name__)

MANIFEST_PATH = pathlib.Path(__file__).parent / 'data' / 'catalog.json'


def _linear(model: SpaceFormModel, A, b, name: str, params: dict) -> Immersion:
    """q -> A q + b, whose jet is constant."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    D, N = A.shape
    def sphere_eval(q):
        return q @ A.T + b
    def ambient_jet(q):
        m = q.shape[0]
        return sphere_eval(q), np.broadcast_to(A, (m, D, N)).copy(), np.zeros((m, D, N, N))
    return Immersion(model, sphere_eval, ambient_jet=ambient_jet, name=name, params=params)


def inclusion(n: int = 2) -> Immersion:
    N = n + 1
    return _linear(SpaceFormModel.euclidean(N), np.eye(N), np.zeros(N), 'inclusion', {'n': n})


def minus_inclusion(n: int = 2) -> Immersion:
    f = compose_with_diffeo(inclusion(n), antipodal(n + 1))
    f.name = 'minus_inclusion'
    return f


def reflected(n: int = 2) -> Immersion:
    f = compose_with_diffeo(inclusion(n), reflection(n + 1))
    f.name = 'reflected'
    return f


def scaled_sphere(mu: float = -1.0, n: int = 2) -> Immersion:
    return round_sphere(SpaceFormModel.euclidean(n + 1), mu)


def _hyperbolic_sphere(kind: ModelKind, mu: float, kappa: float, n: int) -> Immersion:
    model = SpaceFormModel(kind, n + 1, kappa)
    try:
        return round_sphere(model, mu)
    except DomainError as e:
        raise CatalogError(str(e)) from e


def halfspace_sphere(mu: float = -2.0, kappa: float = 1.0, n: int = 2) -> Immersion:
    return _hyperbolic_sphere(ModelKind.HALFSPACE, mu, kappa, n)


def ball_sphere(mu: float = -2.0, kappa: float = 1.0, n: int = 2) -> Immersion:
    return _hyperbolic_sphere(ModelKind.BALL, mu, kappa, n)


def hyperboloid_sphere(mu: float = -2.0, kappa: float = 1.0, n: int = 2) -> Immersion:
    return _hyperbolic_sphere(ModelKind.HYPERBOLOID, mu, kappa, n)


def ellipsoid(axes=(2.0, 1.0, 1.0)) -> Immersion:
    """q -> diag(axes) q in Euclidean space.

    Principal curvatures lie in [-max(axes) / min(axes)^2, -min(axes) / max(axes)^2]."""
    axes = np.asarray(axes, dtype=float)
    if np.any(axes <= 0.0):
        raise CatalogError(f'ellipsoid axes must be positive, got {axes.tolist()}')
    N = len(axes)
    return _linear(SpaceFormModel.euclidean(N), np.diag(axes), np.zeros(N), 'ellipsoid', {'axes': axes.tolist()})


def ellipsoid_range(axes) -> t.Tuple[float, float]:
    axes = np.asarray(axes, dtype=float)
    return -axes.max() / axes.min() ** 2, -axes.min() / axes.max() ** 2


def ball_ellipsoid(axes=(0.8, 0.4, 0.4), kappa: float = 1.0) -> Immersion:
    """A centered ellipsoid inside the ball; its curvatures straddle -kappa."""
    axes = np.asarray(axes, dtype=float)
    if np.any(axes <= 0.0) or np.any(axes >= 1.0):
        raise CatalogError(f'ball ellipsoid axes must lie in (0, 1), got {axes.tolist()}')
    N = len(axes)
    model = SpaceFormModel(ModelKind.BALL, N, kappa)
    return _linear(model, np.diag(axes), np.zeros(N), 'ball_ellipsoid', {'axes': axes.tolist(), 'kappa': kappa})


# Harmonic polynomials on R^N used as radial bumps: value, gradient, Hessian
def _mode_q0q1(q):
    m, N = q.shape
    H = q[:, 0] * q[:, 1]
    grad = np.zeros((m, N))
    grad[:, 0] = q[:, 1]
    grad[:, 1] = q[:, 0]
    hess = np.zeros((m, N, N))
    hess[:, 0, 1] = hess[:, 1, 0] = 1.0
    return H, grad, hess


def _mode_q0q1q2(q):
    m, N = q.shape
    H = q[:, 0] * q[:, 1] * q[:, 2]
    grad = np.zeros((m, N))
    grad[:, 0] = q[:, 1] * q[:, 2]
    grad[:, 1] = q[:, 0] * q[:, 2]
    grad[:, 2] = q[:, 0] * q[:, 1]
    hess = np.zeros((m, N, N))
    hess[:, 0, 1] = hess[:, 1, 0] = q[:, 2]
    hess[:, 0, 2] = hess[:, 2, 0] = q[:, 1]
    hess[:, 1, 2] = hess[:, 2, 1] = q[:, 0]
    return H, grad, hess


def _mode_zonal(q):
    # q0^2 - q1^2
    m, N = q.shape
    H = q[:, 0] ** 2 - q[:, 1] ** 2
    grad = np.zeros((m, N))
    grad[:, 0] = 2.0 * q[:, 0]
    grad[:, 1] = -2.0 * q[:, 1]
    hess = np.zeros((m, N, N))
    hess[:, 0, 0] = 2.0
    hess[:, 1, 1] = -2.0
    return H, grad, hess


BUMP_MODES = {'q0q1': _mode_q0q1, 'q0q1q2': _mode_q0q1q2, 'q0^2-q1^2': _mode_zonal}

# default base curvature of the bumped sphere per model (kappa = 1)
_BUMP_BASE = {
    ModelKind.EUCLIDEAN: -1.0,
    ModelKind.HALFSPACE: -2.0,
    ModelKind.BALL: -1.25,
    ModelKind.HYPERBOLOID: -1.25,
}


def _bump_jet(mode, eps: float, scale: float, center: np.ndarray):
    """Extension F(q) = center + scale (1 + eps H(q)) q with its first two derivatives."""
    bump = BUMP_MODES[mode]
    def ambient_jet(q):
        m, N = q.shape
        H, grad, hess = bump(q)
        rho = 1.0 + eps * H
        F = center + scale * rho[:, None] * q
        eye = np.eye(N)
        DF = scale * (rho[:, None, None] * eye + eps * np.einsum('mi,mj->mij', q, grad))
        D2F = scale * eps * (
            np.einsum('ij,mk->mijk', eye, grad)
            + np.einsum('ik,mj->mijk', eye, grad)
            + np.einsum('mi,mjk->mijk', q, hess)
        )
        return F, DF, D2F
    return ambient_jet


def _ball_to_hyperboloid_jet(x: np.ndarray, kappa: float):
    """The map x -> (2x, 1 + |x|^2) / (kappa (1 - |x|^2)) with its first two derivatives."""
    m, N = x.shape
    a = 1.0 - np.sum(x * x, axis=-1)
    eye = np.eye(N)
    H = np.concatenate([2.0 * x / a[:, None], (2.0 / a - 1.0)[:, None]], axis=1) / kappa
    DH = np.empty((m, N + 1, N))
    DH[:, :N, :] = 2.0 * (eye / a[:, None, None] + 2.0 * np.einsum('mi,mj->mij', x, x) / a[:, None, None] ** 2)
    DH[:, N, :] = 4.0 * x / a[:, None] ** 2
    D2H = np.empty((m, N + 1, N, N))
    D2H[:, :N] = 2.0 * (
        2.0 * (np.einsum('ij,mk->mijk', eye, x) + np.einsum('ik,mj->mijk', eye, x) + np.einsum('jk,mi->mijk', eye, x)) / a[:, None, None, None] ** 2
        + 8.0 * np.einsum('mi,mj,mk->mijk', x, x, x) / a[:, None, None, None] ** 3
    )
    D2H[:, N] = 2.0 * (2.0 * eye / a[:, None, None] ** 2 + 8.0 * np.einsum('mj,mk->mjk', x, x) / a[:, None, None] ** 3)
    return H, DH / kappa, D2H / kappa


def _lift_to_hyperboloid(ball_jet, kappa: float):
    def ambient_jet(q):
        x, Dx, D2x = ball_jet(q)
        H, DH, D2H = _ball_to_hyperboloid_jet(x, kappa)
        DF = np.einsum('mdk,mki->mdi', DH, Dx)
        D2F = np.einsum('mdkl,mki,mlj->mdij', D2H, Dx, Dx) + np.einsum('mdk,mkij->mdij', DH, D2x)
        return H, DF, D2F
    return ambient_jet


def bumpy_sphere(eps: float = 0.05, model: str = 'Euclidean', kappa: float = 1.0, mu0: float | None = None, n: int = 2, mode: str = 'q0q1') -> Immersion:
    """A round sphere of curvature mu0 with radius multiplied by 1 + eps H, H a harmonic polynomial."""
    kind = ModelKind(model)
    if mode not in BUMP_MODES:
        raise CatalogError(f'unknown bump mode {mode!r}{_suggest(mode, BUMP_MODES)}')
    if mode == 'q0q1q2' and n < 2:
        raise CatalogError('the q0q1q2 bump needs n >= 2')
    if not abs(eps) < 0.2:
        raise CatalogError(f'bump amplitude must satisfy |eps| < 0.2, got {eps}')
    kappa = 0.0 if kind == ModelKind.EUCLIDEAN else float(kappa)
    mu0 = _BUMP_BASE[kind] * (kappa if kappa > 0.0 else 1.0) if mu0 is None else float(mu0)
    base = SpaceFormModel(kind, n + 1, kappa) if kind != ModelKind.EUCLIDEAN else SpaceFormModel.euclidean(n + 1)
    if kind != ModelKind.EUCLIDEAN and not mu0 < -kappa:
        raise CatalogError(f'bumpy hyperbolic spheres start from mu0 < -kappa, got {mu0}')
    if kind == ModelKind.EUCLIDEAN and not mu0 < 0.0:
        raise CatalogError(f'bumpy Euclidean spheres start from mu0 < 0, got {mu0}')
    N = n + 1
    center = np.zeros(N)
    if kind == ModelKind.EUCLIDEAN:
        scale = -1.0 / mu0
    elif kind == ModelKind.HALFSPACE:
        m = mu0 / kappa
        scale = -1.0 / (m + 1.0)
        center[-1] = m / (m + 1.0)
        if scale * (1.0 + abs(eps)) >= center[-1]:
            raise CatalogError('bumped half-space sphere leaves the half-space')
    else:
        scale = math.tanh(0.5 * math.atanh(-kappa / mu0))
        if scale * (1.0 + abs(eps)) >= 1.0:
            raise CatalogError('bumped ball sphere leaves the ball')
    jet = _bump_jet(mode, eps, scale, center)
    if kind == ModelKind.HYPERBOLOID:
        jet = _lift_to_hyperboloid(jet, kappa)
    params = {'eps': eps, 'model': kind.value, 'kappa': kappa, 'mu0': mu0, 'n': n, 'mode': mode}
    return Immersion(base, lambda q: jet(q)[0], ambient_jet=jet, name=f'bumpy_sphere({kind.value})', params=params)


def halfspace_graph_sphere(eps: float = 0.05, mu: float = -2.0, kappa: float = 1.0, n: int = 2) -> Immersion:
    """The half-space round sphere of curvature mu with eps q0 q1 added to the height."""
    if not mu < -kappa:
        raise CatalogError(f'needs mu < -kappa, got {mu}')
    if not abs(eps) < 0.2:
        raise CatalogError(f'graph amplitude must satisfy |eps| < 0.2, got {eps}')
    N = n + 1
    model = SpaceFormModel(ModelKind.HALFSPACE, N, kappa)
    m = mu / kappa
    r = -1.0 / (m + 1.0)
    c = m / (m + 1.0)
    def ambient_jet(q):
        k = q.shape[0]
        H, grad, hess = _mode_q0q1(q)
        F = r * q
        F[:, -1] += c + eps * H
        DF = np.broadcast_to(r * np.eye(N), (k, N, N)).copy()
        DF[:, -1, :] += eps * grad
        D2F = np.zeros((k, N, N, N))
        D2F[:, -1] = eps * hess
        return F, DF, D2F
    return Immersion(
        model, lambda q: ambient_jet(q)[0], ambient_jet=ambient_jet,
        name='halfspace_graph_sphere', params={'eps': eps, 'mu': mu, 'kappa': kappa, 'n': n},
    )


CONSTRUCTORS: t.Dict[str, t.Callable[..., Immersion]] = {
    'inclusion': inclusion,
    'minus_inclusion': minus_inclusion,
    'reflected': reflected,
    'scaled_sphere': scaled_sphere,
    'halfspace_sphere': halfspace_sphere,
    'ball_sphere': ball_sphere,
    'hyperboloid_sphere': hyperboloid_sphere,
    'ellipsoid': ellipsoid,
    'ball_ellipsoid': ball_ellipsoid,
    'bumpy_sphere': bumpy_sphere,
    'halfspace_graph_sphere': halfspace_graph_sphere,
}


def _suggest(name: str, choices) -> str:
    match = process.extractOne(name, list(choices))
    if match is None:
        return ''
    return f'; did you mean {match[0]!r}?'


class CatalogEntry:
    """One manifest row: a constructor, its parameters and what it should measure."""
    name: str
    constructor: str
    params: dict
    model: ModelKind
    interval: CurvatureInterval
    expected_lambda: t.Tuple[float, float]
    tolerance: float # slack around expected_lambda
    provenance: str
    expected_degree: int | None
    regime: str
    negative_control: bool # must fail the single-signed certificate
    def __init__(self, data: dict):
        self.name = data['name']
        self.constructor = data['constructor']
        self.params = dict(data.get('params', {}))
        self.model = ModelKind(data['model'])
        self.interval = CurvatureInterval.parse(data['interval'])
        expected = data['expected']
        self.expected_lambda = tuple(float(v) for v in expected['lambda'])
        self.tolerance = float(expected.get('tolerance', 0.0))
        self.provenance = expected.get('provenance', 'DERIVED')
        self.expected_degree = expected.get('degree')
        self.regime = data.get('regime', '')
        self.negative_control = bool(data.get('negative_control', False))
    def make(self, **overrides) -> Immersion:
        try:
            f = CONSTRUCTORS[self.constructor](**{**self.params, **overrides})
        except TypeError as e:
            raise CatalogError(f'{self.name}: {e}') from e
        f.name = self.name
        return f
    @property
    def disjoint(self) -> bool:
        kappa = 0.0 if self.model == ModelKind.EUCLIDEAN else float(self.params.get('kappa', 1.0))
        if kappa == 0.0:
            return not bool(self.interval.contains(0.0, tol=0.0))
        return self.interval.classify(kappa) == IntervalClass.DISJOINT
    def as_json(self) -> dict:
        return {
            'name': self.name, 'constructor': self.constructor, 'params': self.params,
            'model': self.model.value, 'interval': str(self.interval),
            'expected': {
                'lambda': list(self.expected_lambda), 'tolerance': self.tolerance,
                'provenance': self.provenance, 'degree': self.expected_degree,
            },
            'regime': self.regime,
            'negative_control': self.negative_control,
        }
    def __repr__(self):
        return f'''<CatalogEntry {self.name} model={self.model.value} I={self.interval}>'''


class ValidationResult:
    entry: str
    lo: float
    hi: float
    passed: bool
    def __init__(self, entry, lo, hi, passed):
        self.entry = entry
        self.lo = lo
        self.hi = hi
        self.passed = passed
    def __repr__(self):
        return f'''<ValidationResult {self.entry} [{self.lo:.6g}, {self.hi:.6g}] passed={self.passed}>'''


class Catalog:
    """The manifest, loaded. Iterates over CatalogEntry objects in file order."""
    version: int
    entries: t.Dict[str, CatalogEntry]
    def __init__(self, data: dict):
        self.version = int(data.get('version', 1))
        self.entries = {}
        for row in data['entries']:
            if row['constructor'] not in CONSTRUCTORS:
                raise CatalogError(f'{row["name"]}: unknown constructor {row["constructor"]!r}{_suggest(row["constructor"], CONSTRUCTORS)}')
            entry = CatalogEntry(row)
            self.entries[entry.name] = entry
    @classmethod
    def load(cls, path: str | pathlib.Path = MANIFEST_PATH) -> 'Catalog':
        with open(path) as fh:
            return cls(json.load(fh))
    def __getitem__(self, name: str) -> CatalogEntry:
        if name not in self.entries:
            raise CatalogError(f'unknown catalog entry {name!r}{_suggest(name, self.entries)}')
        return self.entries[name]
    def __iter__(self):
        return iter(self.entries.values())
    def __len__(self):
        return len(self.entries)
    def regimes(self) -> t.Set[str]:
        return {e.regime for e in self}
    def validate(self, mesh: SphereMesh | None = None, verbose: bool = False) -> t.List[ValidationResult]:
        """Re-derives each entry's curvature range and compares it with the manifest."""
        mesh = SphereMesh.icosphere(1) if mesh is None else mesh
        results = []
        for i, entry in enumerate(self):
            if verbose:
                print(f'''Validating:{i + 1}/{len(self)}:{entry.name}''')
            f = entry.make()
            if f.n != mesh.n:
                logger.info('skipping %s: n=%d does not match the mesh', entry.name, f.n)
                continue
            found = curvature_range(f, mesh)
            lo, hi = entry.expected_lambda
            passed = lo - entry.tolerance <= found.lo and found.hi <= hi + entry.tolerance
            if not passed:
                logger.warning('%s: sampled curvatures [%.6g, %.6g] outside expected [%g, %g]', entry.name, found.lo, found.hi, lo, hi)
            results.append(ValidationResult(entry.name, found.lo, found.hi, passed))
        return results


_default_catalog: Catalog | None = None


def load_catalog(validate: bool = False, mesh: SphereMesh | None = None) -> Catalog:
    """The shipped manifest, loaded once. validate=True raises CatalogError on any mismatch."""
    global _default_catalog
    if _default_catalog is None:
        _default_catalog = Catalog.load()
    if validate:
        failed = [r for r in _default_catalog.validate(mesh) if not r.passed]
        if failed:
            raise CatalogError(f'catalog entries disagree with their expectations: {[r.entry for r in failed]}')
    return _default_catalog


def make(name: str, **params) -> Immersion:
    """A manifest entry (its defaults overridden by params) or a bare constructor."""
    catalog = load_catalog()
    if name in catalog.entries:
        return catalog.entries[name].make(**params)
    if name in CONSTRUCTORS:
        try:
            return CONSTRUCTORS[name](**params)
        except TypeError as e:
            raise CatalogError(f'{name}: {e}') from e
    raise CatalogError(f'unknown catalog entry {name!r}{_suggest(name, list(catalog.entries) + list(CONSTRUCTORS))}')
