"""Gauss maps of immersions as maps S^n -> S^n, their Jacobians and degrees.

    Euclidean  nu_f, the unit normal itself (Euclidean space)
    Flat       the half-space normal renormalized to Euclidean unit length
    Visual     ideal endpoint of the geodesic ray along nu_f
    Check      ideal endpoint of the geodesic ray along -nu_f

Visual and check maps land on the ideal boundary in ball coordinates,
whatever model the immersion lives in.
"""
import enum
import logging
import math
import typing as t

import numpy as np
from scipy.spatial import cKDTree

from .datamodels import ChartPoint, CurvatureInterval, Immersion, IntervalClass, SphereDiffeo, stereographic
from .errors import DegreeUnresolvedError, DomainError, OrientationMismatchError
from .immersions import DEFAULT_STEP, _D1, in_model, jet, on_sphere, require_in_interval, shape_field, unit_normal
from .meshes import SphereMesh, sphere_volume
from .spaceforms import BoundaryPoint, ModelKind, ideal_endpoint

logger = logging.getLogger(__name__)

DET_TOL = 1e-8 # |det J| below this leaves a sample uncertified
DEGREE_RESIDUAL = 0.1


class GaussKind(str, enum.Enum):
    EUCLIDEAN = 'Euclidean'
    FLAT = 'Flat'
    VISUAL = 'Visual'
    CHECK = 'Check'


def euclidean_gauss(f: Immersion, p: ChartPoint) -> np.ndarray:
    if f.model.kind != ModelKind.EUCLIDEAN:
        raise DomainError('nu as a sphere map needs Euclidean space')
    return unit_normal(f, jet(f, p, order=1))


def flat_gauss(f: Immersion, p: ChartPoint) -> np.ndarray:
    """nu_f / (kappa f^N): the half-space normal at Euclidean unit length."""
    if f.model.kind != ModelKind.HALFSPACE:
        raise DomainError('the flat Gauss map is defined in the half-space model')
    j = jet(f, p, order=1)
    nu = unit_normal(f, j)
    return nu / (f.model.kappa * j.value[:, -1:])


def visual_gauss(f: Immersion, p: ChartPoint) -> BoundaryPoint:
    j = jet(f, p, order=1)
    return ideal_endpoint(f.model, j.value, unit_normal(f, j))


def check_gauss(f: Immersion, p: ChartPoint) -> BoundaryPoint:
    j = jet(f, p, order=1)
    return ideal_endpoint(f.model, j.value, -unit_normal(f, j))


_GAUSS = {
    GaussKind.EUCLIDEAN: euclidean_gauss,
    GaussKind.FLAT: flat_gauss,
    GaussKind.VISUAL: lambda f, p: visual_gauss(f, p).coords,
    GaussKind.CHECK: lambda f, p: check_gauss(f, p).coords,
}


class SphereMap:
    """A map S^n -> S^n given pointwise on unit vectors of R^{n+1}.

    Instantiate like this:
    SphereMap.gauss(f, GaussKind.FLAT)
    SphereMap.from_diffeo(reflection(3), n=2)
    """
    name: str
    n: int
    fn: t.Callable[[np.ndarray], np.ndarray]
    source: Immersion | None
    def __init__(self, name: str, n: int, fn, source: Immersion | None = None):
        self.name = name
        self.n = int(n)
        self.fn = fn
        self.source = source
    def __call__(self, q) -> np.ndarray:
        return np.asarray(self.fn(np.atleast_2d(np.asarray(q, dtype=float))), dtype=float)
    def sample(self, mesh: SphereMesh) -> np.ndarray:
        return self(mesh.vertices)
    @classmethod
    def gauss(cls, f: Immersion, kind: GaussKind | str) -> 'SphereMap':
        kind = GaussKind(kind)
        rule = _GAUSS[kind]
        def fn(q):
            return on_sphere(q, lambda cp: [rule(f, cp)])[0]
        return cls(f'{kind.value.lower()}({f.name})', f.n, fn, source=f)
    @classmethod
    def from_diffeo(cls, g: SphereDiffeo, n: int) -> 'SphereMap':
        return cls(g.name, n, g)
    def __repr__(self):
        return f'''<SphereMap name={self.name} n={self.n}>'''


def designated_gauss(f: Immersion) -> SphereMap:
    """The Gauss map whose Jacobian sign the orientation rules predict:
    nu_f in Euclidean space, the flat map (in half-space coordinates) otherwise."""
    if f.model.kind == ModelKind.EUCLIDEAN:
        return SphereMap.gauss(f, GaussKind.EUCLIDEAN)
    if f.model.kind != ModelKind.HALFSPACE:
        f = in_model(f, f.model.with_kind(ModelKind.HALFSPACE))
    return SphereMap.gauss(f, GaussKind.FLAT)


def flat_gauss_derivative_residual(f: Immersion, p: ChartPoint, u, lam, step: float = DEFAULT_STEP) -> np.ndarray:
    """|d(nu_bar)(u) - ((nu_bar^N - lambda/kappa) / f^N) df(u)| for principal pairs (u, lambda).

    u: (m, n) chart directions, lam: (m,). d(nu_bar) by central differences."""
    if f.model.kind != ModelKind.HALFSPACE:
        raise DomainError('the flat Gauss map is defined in the half-space model')
    u = np.atleast_2d(np.asarray(u, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    kappa = f.model.kappa
    x = p.x
    h = step * (1.0 + np.linalg.norm(x, axis=-1)) / np.linalg.norm(u, axis=-1)
    dnu = sum(w * flat_gauss(f, ChartPoint(p.chart, x + a * h[:, None] * u)) for a, w in _D1.items()) / h[:, None]
    j = jet(f, p, order=1)
    nu_bar = flat_gauss(f, p)
    df_u = np.einsum('mdi,mi->md', j.d1, u)
    factor = (nu_bar[:, -1] - lam / kappa) / j.value[:, -1]
    return np.linalg.norm(dnu - factor[:, None] * df_u, axis=-1)


def _positive_frame(G: np.ndarray) -> np.ndarray:
    """Orthonormal bases E (m, N, n) of the tangent spaces at unit G with det[E, G] = +1."""
    # rows 1.. of Vh span the orthogonal complement of G
    E = np.swapaxes(np.linalg.svd(G[:, None, :])[2][:, 1:, :], 1, 2).copy()
    neg = np.linalg.det(np.concatenate([E, G[:, :, None]], axis=2)) < 0.0
    E[neg, :, 0] *= -1.0
    return E


class JacobianField:
    """Jacobians of a sphere map at mesh vertices, in positively oriented round-orthonormal frames."""
    map_name: str
    mesh: SphereMesh
    images: np.ndarray # (V, N)
    jacobians: np.ndarray # (V, n, n)
    dets: np.ndarray # (V,)
    tol: float
    def __init__(self, map_name, mesh, images, jacobians, dets, tol=DET_TOL):
        self.map_name = map_name
        self.mesh = mesh
        self.images = images
        self.jacobians = jacobians
        self.dets = dets
        self.tol = tol
    @property
    def min_abs_det(self) -> float:
        return float(np.min(np.abs(self.dets)))
    @property
    def certified(self) -> bool:
        """Local diffeomorphism at every sample."""
        return self.min_abs_det >= self.tol
    @property
    def sign(self) -> int:
        """+1 or -1 when certified with constant sign, else 0."""
        if not self.certified:
            return 0
        if np.all(self.dets > 0.0):
            return 1
        if np.all(self.dets < 0.0):
            return -1
        return 0
    @property
    def verdict(self) -> str:
        return 'PASS' if self.sign != 0 else 'FAIL'
    def as_json(self) -> dict:
        return {
            'map': self.map_name, 'mesh_level': self.mesh.level, 'samples': len(self.mesh),
            'min_abs_det': self.min_abs_det, 'sign': self.sign, 'verdict': self.verdict,
        }
    def __repr__(self):
        return f'''<JacobianField map={self.map_name} sign={self.sign} min|det|={self.min_abs_det:.3e}>'''


def jacobian_field(sphere_map: SphereMap, mesh: SphereMesh, step: float = DEFAULT_STEP, tol: float = DET_TOL) -> JacobianField:
    """Chart finite differences of the map, read in round frames on both spheres.

    The source frame is dP/|dP| (conformal), flipped in the North chart so
    that it is positively oriented; the target frame comes from _positive_frame."""
    V = len(mesh)
    N = mesh.n + 1
    n = mesh.n
    images = np.empty((V, N))
    jacobians = np.empty((V, n, n))
    dets = np.empty(V)
    for cp, idx in mesh.chart_batches():
        x = cp.x
        h = step * (1.0 + np.linalg.norm(x, axis=-1))
        G = sphere_map(cp.sphere_points())
        dG = np.empty((len(cp), N, n))
        for i in range(n):
            acc = 0.0
            for a, w in _D1.items():
                shifted = x.copy()
                shifted[:, i] += a * h
                acc = acc + w * sphere_map(stereographic(cp.chart, shifted)[0])
            dG[:, :, i] = acc / h[:, None]
        scale = 2.0 / (1.0 + np.sum(x * x, axis=-1))
        dG = dG / scale[:, None, None]
        if cp.orientation < 0:
            dG[:, :, 0] *= -1.0
        E = _positive_frame(G)
        J = np.einsum('mak,mai->mki', E, dG)
        images[idx] = G
        jacobians[idx] = J
        dets[idx] = np.linalg.det(J)
    field = JacobianField(sphere_map.name, mesh, images, jacobians, dets, tol)
    logger.debug('jacobian_field %s: min |det| %.3e over %d samples', sphere_map.name, field.min_abs_det, V)
    return field


class DegreeReport:
    map_name: str
    mesh_level: int
    raw: float
    rounded: int
    residual: float
    def __init__(self, map_name, mesh_level, raw, rounded, residual):
        self.map_name = map_name
        self.mesh_level = mesh_level
        self.raw = raw
        self.rounded = rounded
        self.residual = residual
    def as_json(self) -> dict:
        return {'map': self.map_name, 'mesh_level': self.mesh_level, 'raw': self.raw, 'rounded': self.rounded, 'residual': self.residual}
    def __repr__(self):
        return f'''<DegreeReport map={self.map_name} degree={self.rounded} residual={self.residual:.3e}>'''


def degree(sphere_map: SphereMap, mesh: SphereMesh, *, field: JacobianField | None = None, strict: bool = True) -> DegreeReport:
    """(1 / omega_n) * sum over vertices of weight * det J, rounded.

    Raises DegreeUnresolvedError when the raw sum is 0.1 or more from an
    integer, unless strict is False."""
    if field is None:
        field = jacobian_field(sphere_map, mesh)
    raw = mesh.integrate(field.dets) / sphere_volume(mesh.n)
    rounded = int(round(raw))
    residual = abs(raw - rounded)
    if strict and residual >= DEGREE_RESIDUAL:
        raise DegreeUnresolvedError(raw, residual)
    return DegreeReport(sphere_map.name, mesh.level, raw, rounded, residual)


class OrientationClass(str, enum.Enum):
    PRESERVING = 'preserving'
    REVERSING = 'reversing'


class OrientationVerdict:
    predicted: OrientationClass
    observed: OrientationClass | None # None when the numeric check was skipped
    field: JacobianField | None
    def __init__(self, predicted, observed=None, field=None):
        self.predicted = predicted
        self.observed = observed
        self.field = field
    def __repr__(self):
        return f'''<OrientationVerdict predicted={self.predicted.value} observed={self.observed.value if self.observed else None}>'''


def predicted_orientation(model_kappa: float, n: int, interval: CurvatureInterval) -> OrientationClass:
    """Reversing exactly when n is odd and I lies above kappa (above 0 in Euclidean space)."""
    if n % 2 == 1 and interval.above(model_kappa):
        return OrientationClass.REVERSING
    return OrientationClass.PRESERVING


def orientation_class(f: Immersion, interval: CurvatureInterval, mesh: SphereMesh | None = None) -> OrientationVerdict:
    """Predicted orientation behaviour of the designated Gauss map, checked numerically at n = 2.

    The numeric check needs a mesh; it verifies that f has curvatures in I and
    that the Jacobian sign of the designated Gauss map agrees with the prediction."""
    kappa = f.model.kappa
    if f.model.is_hyperbolic:
        if interval.classify(kappa) != IntervalClass.DISJOINT:
            raise DomainError(f'{interval} is not disjoint from [-{kappa:g}, {kappa:g}]')
    elif interval.contains(0.0, tol=0.0):
        raise DomainError(f'{interval} contains 0')
    predicted = predicted_orientation(kappa, f.n, interval)
    if mesh is None or f.n != 2:
        return OrientationVerdict(predicted)
    require_in_interval(f, mesh, interval)
    field = jacobian_field(designated_gauss(f), mesh)
    if field.sign == 0:
        raise OrientationMismatchError(f'{field.map_name} is not a local diffeomorphism of constant sign (min |det| {field.min_abs_det:.3e})')
    observed = OrientationClass.PRESERVING if field.sign > 0 else OrientationClass.REVERSING
    if observed != predicted:
        raise OrientationMismatchError(f'{field.map_name}: predicted {predicted.value}, observed {observed.value}')
    return OrientationVerdict(predicted, observed, field)


class SignVerdict:
    """Whether sampled principal curvatures sit on one side of [-kappa, kappa]."""
    kappa: float
    lo: float
    hi: float
    side: int # -1 all below -kappa, +1 all above kappa, 0 mixed or touching
    def __init__(self, kappa, lo, hi, side):
        self.kappa = kappa
        self.lo = lo
        self.hi = hi
        self.side = side
    @property
    def verdict(self) -> str:
        return 'PASS' if self.side != 0 else 'FAIL'
    def as_json(self) -> dict:
        return {'kappa': self.kappa, 'lo': self.lo, 'hi': self.hi, 'side': self.side, 'verdict': self.verdict}
    def __repr__(self):
        return f'''<SignVerdict [{self.lo:.6g}, {self.hi:.6g}] side={self.side}>'''


def certify_single_signed(f: Immersion, mesh: SphereMesh, kappa: float | None = None) -> SignVerdict:
    """PASS iff every sampled principal curvature is > kappa, or every one is < -kappa.

    kappa defaults to the model's (0 in Euclidean space, where the check reads
    as nonvanishing Gaussian curvature forcing one sign)."""
    kappa = f.model.kappa if kappa is None else float(kappa)
    lam = shape_field(f, mesh).lambdas
    lo = float(np.min(lam))
    hi = float(np.max(lam))
    side = 1 if lo > kappa else -1 if hi < -kappa else 0
    return SignVerdict(kappa, lo, hi, side)


class CollisionScan:
    min_distance: float
    pair: t.Tuple[int, int] | None
    def __init__(self, min_distance, pair):
        self.min_distance = min_distance
        self.pair = pair
    def __repr__(self):
        return f'''<CollisionScan min_distance={self.min_distance:.3e} pair={self.pair}>'''


def collision_scan(images, mesh: SphereMesh, separation: float = 0.5, neighbors: int = 16) -> CollisionScan:
    """Smallest image distance between vertices at least `separation` apart on S^n.

    A clear positive value is evidence (not proof) of injectivity on the mesh."""
    images = np.asarray(images, dtype=float)
    k = min(neighbors, len(images))
    distances, index = cKDTree(images).query(images, k=k)
    apart = np.linalg.norm(mesh.vertices[:, None, :] - mesh.vertices[index], axis=-1) >= separation
    masked = np.where(apart, distances, math.inf)
    if not np.any(np.isfinite(masked)):
        return CollisionScan(math.inf, None)
    i, c = np.unravel_index(int(np.argmin(masked)), masked.shape)
    return CollisionScan(float(masked[i, c]), (int(i), int(index[i, c])))
