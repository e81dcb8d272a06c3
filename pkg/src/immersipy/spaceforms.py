"""Ambient geometry: Euclidean space and hyperbolic space of curvature -kappa**2.

Hyperbolic space comes in three charts:

    HalfSpace    x_N > 0,            metric |dx|^2 / (kappa x_N)^2
    Ball         |x| < 1,            metric 4|dx|^2 / (kappa (1 - |x|^2))^2
    Hyperboloid  <X,X>_L = -1/kappa^2, X_last > 0, inside R^{N,1}

(N = ambient_dim = n + 1.) Ball and half-space coordinates of a point do not
depend on kappa; only the metric scales. Everything routes through the
hyperboloid, where geodesics and ideal endpoints have closed forms.

Points and vectors are numpy arrays whose last axis holds coordinates; any
leading axes are batch axes and broadcast.
"""
import enum
import logging
import typing as t

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError

logger = logging.getLogger(__name__)

DOMAIN_TOL = 1e-12 # membership slack for half-space / ball
HYPERBOLOID_TOL = 1e-9 # relative slack on <X,X>_L = -1/kappa^2
UNIT_TOL = 1e-9 # how far from 1 a "unit" vector may be before it gets renormalized


class ModelKind(str, enum.Enum):
    EUCLIDEAN = 'Euclidean'
    HALFSPACE = 'HalfSpace'
    BALL = 'Ball'
    HYPERBOLOID = 'Hyperboloid'


class SpaceFormModel:
    """Which ambient space, in which chart.

    Instantiate like this:
    SpaceFormModel('Ball', ambient_dim=3, kappa=1.0)
    SpaceFormModel.euclidean(3)
    """
    kind: ModelKind
    ambient_dim: int # n + 1
    kappa: float # sectional curvature is -kappa**2
    def __init__(self, kind: ModelKind | str, ambient_dim: int, kappa: float = 1.0):
        kind = ModelKind(kind)
        kappa = float(kappa)
        if ambient_dim < 3:
            raise DomainError(f'ambient_dim must be at least 3, got {ambient_dim}')
        if kind == ModelKind.EUCLIDEAN and kappa != 0.0:
            raise DomainError(f'Euclidean space has kappa = 0, got {kappa}')
        if kind != ModelKind.EUCLIDEAN and not kappa > 0.0:
            raise DomainError(f'{kind.value} model needs kappa > 0, got {kappa}')
        self.kind = kind
        self.ambient_dim = int(ambient_dim)
        self.kappa = kappa
    @classmethod
    def euclidean(cls, ambient_dim: int) -> 'SpaceFormModel':
        return cls(ModelKind.EUCLIDEAN, ambient_dim, 0.0)
    @property
    def n(self) -> int:
        """Dimension of the hypersurfaces living in this space."""
        return self.ambient_dim - 1
    @property
    def is_hyperbolic(self) -> bool:
        return self.kind != ModelKind.EUCLIDEAN
    @property
    def coord_dim(self) -> int:
        """Length of a coordinate vector (one more on the hyperboloid)."""
        if self.kind == ModelKind.HYPERBOLOID:
            return self.ambient_dim + 1
        return self.ambient_dim
    def with_kind(self, kind: ModelKind | str) -> 'SpaceFormModel':
        """Same space, another chart."""
        return SpaceFormModel(kind, self.ambient_dim, self.kappa)
    def basepoint(self) -> np.ndarray:
        """The canonical center: Ball origin, HalfSpace e_N, Hyperboloid (0,...,0,1/kappa)."""
        x = np.zeros(self.coord_dim)
        if self.kind == ModelKind.HALFSPACE:
            x[-1] = 1.0
        elif self.kind == ModelKind.HYPERBOLOID:
            x[-1] = 1.0 / self.kappa
        return x
    def as_json(self) -> dict:
        return {'kind': self.kind.value, 'ambient_dim': self.ambient_dim, 'kappa': self.kappa}
    @classmethod
    def from_json(cls, data: dict) -> 'SpaceFormModel':
        kind = ModelKind(data['kind'])
        kappa = data.get('kappa', 0.0 if kind == ModelKind.EUCLIDEAN else 1.0)
        return cls(kind, data['ambient_dim'], kappa)
    def __eq__(self, other):
        if not isinstance(other, SpaceFormModel): return False
        return (self.kind, self.ambient_dim, self.kappa) == (other.kind, other.ambient_dim, other.kappa)
    def __hash__(self):
        return hash((self.kind, self.ambient_dim, self.kappa))
    def __repr__(self):
        return f'''<SpaceFormModel kind={self.kind.value} dim={self.ambient_dim} kappa={self.kappa}>'''


class BoundaryPoint:
    """Point(s) of the ideal boundary, always in ball-boundary coordinates (unit vectors)."""
    coords: np.ndarray # (..., N)
    renormalized: bool # True when the direction fed in was not unit and got rescaled
    def __init__(self, coords, renormalized: bool = False):
        coords = np.asarray(coords, dtype=float)
        norms = np.linalg.norm(coords, axis=-1, keepdims=True)
        self.coords = coords / norms
        self.renormalized = renormalized
    @classmethod
    def from_halfspace(cls, y, ambient_dim: int | None = None) -> 'BoundaryPoint':
        """Ingest a half-space boundary point y in R^n; None means the point at infinity."""
        if y is None:
            if ambient_dim is None:
                raise DomainError('ambient_dim is needed to place the point at infinity')
            c = np.zeros(ambient_dim)
            c[-1] = -1.0
            return cls(c)
        y = np.asarray(y, dtype=float)
        x = np.concatenate([y, np.zeros(y.shape[:-1] + (1,))], axis=-1)
        return cls(_inversion(_flip(x)))
    def to_halfspace(self) -> np.ndarray | None:
        """Inverse of from_halfspace for a single point; None for infinity."""
        x = self.coords
        if np.linalg.norm(x - _south(x.shape[-1])) < 1e-12:
            return None
        return _flip(_inversion(x))[..., :-1]
    def angle_to(self, other: 'BoundaryPoint') -> np.ndarray:
        dots = np.clip(np.sum(self.coords * other.coords, axis=-1), -1.0, 1.0)
        return np.arccos(dots)
    def __repr__(self):
        return f'''<BoundaryPoint coords={np.round(self.coords, 6).tolist()}>'''


def lorentz(a, b) -> np.ndarray:
    """<a, b>_L = a_0 b_0 + ... - a_last b_last."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sum(a[..., :-1] * b[..., :-1], axis=-1) - a[..., -1] * b[..., -1]


def lorentz_matrix(size: int) -> np.ndarray:
    J = np.eye(size)
    J[-1, -1] = -1.0
    return J


def check_point(model: SpaceFormModel, p) -> np.ndarray:
    """Returns p as a float array, or raises DomainError."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != model.coord_dim:
        raise DomainError(f'{model!r} expects {model.coord_dim} coordinates, got shape {p.shape}')
    if not np.all(np.isfinite(p)):
        raise DomainError('non-finite coordinates')
    if model.kind == ModelKind.HALFSPACE:
        if np.any(p[..., -1] <= DOMAIN_TOL):
            raise DomainError('half-space point with nonpositive last coordinate')
    elif model.kind == ModelKind.BALL:
        if np.any(np.sum(p * p, axis=-1) >= 1.0 - DOMAIN_TOL):
            raise DomainError('ball point on or outside the unit sphere')
    elif model.kind == ModelKind.HYPERBOLOID:
        k2 = model.kappa ** 2
        defect = np.abs(k2 * lorentz(p, p) + 1.0)
        scale = 1.0 + k2 * np.sum(p * p, axis=-1)
        if np.any(defect > HYPERBOLOID_TOL * scale) or np.any(p[..., -1] <= 0.0):
            raise DomainError('point is not on the upper sheet of the hyperboloid')
    return p


def conformal_factor(model: SpaceFormModel, p: np.ndarray) -> np.ndarray:
    """e^phi with metric e^{2 phi} |dx|^2 (conformal charts only)."""
    if model.kind == ModelKind.EUCLIDEAN:
        return np.ones(p.shape[:-1])
    if model.kind == ModelKind.HALFSPACE:
        return 1.0 / (model.kappa * p[..., -1])
    if model.kind == ModelKind.BALL:
        return 2.0 / (model.kappa * (1.0 - np.sum(p * p, axis=-1)))
    raise DomainError('the hyperboloid is not a conformal chart')


def _grad_log_factor(model: SpaceFormModel, p: np.ndarray) -> np.ndarray:
    """Gradient of phi (conformal charts only)."""
    if model.kind == ModelKind.EUCLIDEAN:
        return np.zeros_like(p)
    if model.kind == ModelKind.HALFSPACE:
        g = np.zeros_like(p)
        g[..., -1] = -1.0 / p[..., -1]
        return g
    if model.kind == ModelKind.BALL:
        return 2.0 * p / (1.0 - np.sum(p * p, axis=-1))[..., None]
    raise DomainError('the hyperboloid is not a conformal chart')


def metric_tensor(model: SpaceFormModel, p) -> np.ndarray:
    """Riemannian metric in model coordinates, shape (..., D, D).

    For the hyperboloid this is the ambient Lorentz form; restricted to tangent
    vectors (those Lorentz-orthogonal to p) it is the induced metric."""
    p = check_point(model, p)
    D = model.coord_dim
    if model.kind == ModelKind.HYPERBOLOID:
        return np.broadcast_to(lorentz_matrix(D), p.shape[:-1] + (D, D)).copy()
    factor = conformal_factor(model, p)
    return (factor ** 2)[..., None, None] * np.eye(D)


def christoffel(model: SpaceFormModel, p) -> np.ndarray:
    """Levi-Civita symbols, indexed [..., k, i, j] for Gamma^k_ij.

    Conformal charts: Gamma^k_ij = d_ik phi_j + d_jk phi_i - d_ij phi_k.
    Euclidean space and the ambient Lorentz chart of the hyperboloid have none."""
    p = check_point(model, p)
    D = model.coord_dim
    if model.kind in (ModelKind.EUCLIDEAN, ModelKind.HYPERBOLOID):
        return np.zeros(p.shape[:-1] + (D, D, D))
    dphi = _grad_log_factor(model, p)
    eye = np.eye(D)
    gamma = (
        np.einsum('ki,...j->...kij', eye, dphi)
        + np.einsum('kj,...i->...kij', eye, dphi)
        - np.einsum('ij,...k->...kij', eye, dphi)
    )
    return gamma


def christoffel_from_metric(model: SpaceFormModel, p, step: float = 1e-5) -> np.ndarray:
    """Gamma^k_ij = 1/2 g^kl (d_i g_lj + d_j g_li - d_l g_ij) with central differences of metric_tensor.

    Same indexing as christoffel(); meant as its independent check."""
    p = check_point(model, p)
    D = model.coord_dim
    dG = np.empty(p.shape[:-1] + (D, D, D)) # [..., l, a, b] = d_l g_ab
    for l in range(D):
        e = np.zeros(D)
        e[l] = step
        dG[..., l, :, :] = (metric_tensor(model, p + e) - metric_tensor(model, p - e)) / (2.0 * step)
    lowered = (
        np.einsum('...ilj->...lij', dG)
        + np.einsum('...jli->...lij', dG)
        - dG
    )
    return 0.5 * np.einsum('...kl,...lij->...kij', np.linalg.inv(metric_tensor(model, p)), lowered)


def model_inner(model: SpaceFormModel, p, u, v) -> np.ndarray:
    """<u, v> at p in the model metric."""
    p = check_point(model, p)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if model.kind == ModelKind.HYPERBOLOID:
        return lorentz(u, v)
    return conformal_factor(model, p) ** 2 * np.sum(u * v, axis=-1)


def model_norm(model: SpaceFormModel, p, v) -> np.ndarray:
    return np.sqrt(np.maximum(model_inner(model, p, v, v), 0.0))


# Half-space <-> ball goes through an inversion about -e_N (radius sqrt 2),
# followed by x_1 -> -x_1 so both charts keep the R^N orientation.

def _south(D: int) -> np.ndarray:
    c = np.zeros(D)
    c[-1] = -1.0
    return c


def _flip(x: np.ndarray) -> np.ndarray:
    y = np.array(x, dtype=float, copy=True)
    y[..., 0] = -y[..., 0]
    return y


def _inversion(x: np.ndarray) -> np.ndarray:
    c = _south(x.shape[-1])
    w = x - c
    return c + 2.0 * w / np.sum(w * w, axis=-1, keepdims=True)


def _inversion_push(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    c = _south(x.shape[-1])
    w = x - c
    w2 = np.sum(w * w, axis=-1, keepdims=True)
    wv = np.sum(w * v, axis=-1, keepdims=True)
    return 2.0 * (v / w2 - 2.0 * w * wv / w2 ** 2)


def _ball_to_hyperboloid(x: np.ndarray, kappa: float) -> np.ndarray:
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    a = 1.0 - r2
    return np.concatenate([2.0 * x / a, (1.0 + r2) / a], axis=-1) / kappa


def _ball_to_hyperboloid_push(x: np.ndarray, v: np.ndarray, kappa: float) -> np.ndarray:
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    a = 1.0 - r2
    xv = np.sum(x * v, axis=-1, keepdims=True)
    spatial = 2.0 * v / a + 4.0 * x * xv / a ** 2
    last = 4.0 * xv / a ** 2
    return np.concatenate([spatial, last], axis=-1) / kappa


def _hyperboloid_to_ball(X: np.ndarray, kappa: float) -> np.ndarray:
    Y = kappa * X
    return Y[..., :-1] / (1.0 + Y[..., -1:])


def _hyperboloid_to_ball_push(X: np.ndarray, V: np.ndarray, kappa: float) -> np.ndarray:
    Y = kappa * X
    W = kappa * V
    denom = 1.0 + Y[..., -1:]
    return W[..., :-1] / denom - Y[..., :-1] * W[..., -1:] / denom ** 2


def to_hyperboloid(model: SpaceFormModel, p) -> np.ndarray:
    p = check_point(model, p)
    if model.kind == ModelKind.HYPERBOLOID:
        return p.copy()
    if model.kind == ModelKind.BALL:
        return _ball_to_hyperboloid(p, model.kappa)
    if model.kind == ModelKind.HALFSPACE:
        return _ball_to_hyperboloid(_inversion(_flip(p)), model.kappa)
    raise DomainError('Euclidean space has no hyperboloid model')


def from_hyperboloid(model: SpaceFormModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if model.kind == ModelKind.HYPERBOLOID:
        return X.copy()
    if model.kind == ModelKind.BALL:
        return _hyperboloid_to_ball(X, model.kappa)
    if model.kind == ModelKind.HALFSPACE:
        return _flip(_inversion(_hyperboloid_to_ball(X, model.kappa)))
    raise DomainError('Euclidean space has no hyperboloid model')


def push_to_hyperboloid(model: SpaceFormModel, p, v) -> np.ndarray:
    """Differential of to_hyperboloid at p applied to v."""
    p = check_point(model, p)
    v = np.asarray(v, dtype=float)
    if model.kind == ModelKind.HYPERBOLOID:
        return v.copy()
    if model.kind == ModelKind.BALL:
        return _ball_to_hyperboloid_push(p, v, model.kappa)
    if model.kind == ModelKind.HALFSPACE:
        x = _inversion(_flip(p))
        w = _inversion_push(_flip(p), _flip(v))
        return _ball_to_hyperboloid_push(x, w, model.kappa)
    raise DomainError('Euclidean space has no hyperboloid model')


def push_from_hyperboloid(model: SpaceFormModel, X, V) -> np.ndarray:
    """Differential of from_hyperboloid at X applied to V."""
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    if model.kind == ModelKind.HYPERBOLOID:
        return V.copy()
    if model.kind == ModelKind.BALL:
        return _hyperboloid_to_ball_push(X, V, model.kappa)
    if model.kind == ModelKind.HALFSPACE:
        x = _hyperboloid_to_ball(X, model.kappa)
        w = _hyperboloid_to_ball_push(X, V, model.kappa)
        return _flip(_inversion_push(x, w))
    raise DomainError('Euclidean space has no hyperboloid model')


def _check_pair(source: SpaceFormModel, target: SpaceFormModel) -> None:
    if source.ambient_dim != target.ambient_dim or source.kappa != target.kappa:
        raise DomainError(f'cannot convert between {source!r} and {target!r}')
    if source.is_hyperbolic != target.is_hyperbolic:
        raise DomainError(f'cannot convert between {source!r} and {target!r}')


def convert(p, source: SpaceFormModel, target: SpaceFormModel) -> np.ndarray:
    """Isometry between charts of the same space, via the hyperboloid."""
    _check_pair(source, target)
    if source.kind == target.kind:
        return check_point(source, p).copy()
    return from_hyperboloid(target, to_hyperboloid(source, p))


def push_vector(p, v, source: SpaceFormModel, target: SpaceFormModel) -> np.ndarray:
    """Differential of convert at p applied to v."""
    _check_pair(source, target)
    if source.kind == target.kind:
        return np.array(v, dtype=float, copy=True)
    X = to_hyperboloid(source, p)
    V = push_to_hyperboloid(source, p, v)
    return push_from_hyperboloid(target, X, V)


def _hyperboloid_exp(X: np.ndarray, V: np.ndarray, kappa: float) -> np.ndarray:
    length = np.sqrt(np.maximum(lorentz(V, V), 0.0))[..., None]
    kl = kappa * length
    safe = np.where(kl > 0.0, kl, 1.0)
    sinhc = np.where(kl > 0.0, np.sinh(safe) / safe, 1.0)
    return np.cosh(kl) * X + sinhc * V


def exp_map(model: SpaceFormModel, p, v) -> np.ndarray:
    """Riemannian exponential.

    Hyperboloid: cosh(kappa|v|) p + sinh(kappa|v|) v / (kappa|v|). The other
    hyperbolic charts convert to the hyperboloid and back. v = 0 returns p."""
    p = check_point(model, p)
    v = np.asarray(v, dtype=float)
    if model.kind == ModelKind.EUCLIDEAN:
        return p + v
    if model.kind == ModelKind.HYPERBOLOID:
        scale = np.sqrt(np.sum(p * p, axis=-1) * np.sum(v * v, axis=-1)) + 1e-300
        if np.any(np.abs(lorentz(p, v)) > 1e-8 * scale):
            raise DomainError('v is not tangent to the hyperboloid at p')
    X = to_hyperboloid(model, p)
    V = push_to_hyperboloid(model, p, v)
    out = from_hyperboloid(model, _hyperboloid_exp(X, V, model.kappa))
    zero = np.all(v == 0.0, axis=-1)
    if np.any(zero):
        out = np.where(zero[..., None], p, out)
    return out


def ideal_endpoint(model: SpaceFormModel, p, u) -> BoundaryPoint:
    """Endpoint at infinity of the geodesic ray t -> exp(p, t u), in ball-boundary coordinates.

    On the hyperboloid the ray is cosh(kappa t) X + sinh(kappa t) U / kappa,
    whose direction tends to the null vector kappa X + U."""
    if not model.is_hyperbolic:
        raise DomainError('Euclidean space has no ideal boundary here')
    X = to_hyperboloid(model, p)
    U = push_to_hyperboloid(model, p, u)
    norm = np.sqrt(np.maximum(lorentz(U, U), 0.0))
    if np.any(norm == 0.0):
        raise DomainError('zero direction has no ideal endpoint')
    renormalized = bool(np.any(np.abs(norm - 1.0) > UNIT_TOL))
    if renormalized:
        logger.warning('ideal_endpoint: direction not unit (max defect %.3e), renormalizing', float(np.max(np.abs(norm - 1.0))))
    null = model.kappa * X + U / norm[..., None]
    return BoundaryPoint(null[..., :-1] / null[..., -1:], renormalized=renormalized)


def distance(model: SpaceFormModel, p, q) -> np.ndarray:
    p = check_point(model, p)
    q = check_point(model, q)
    if model.kind == ModelKind.EUCLIDEAN:
        return np.linalg.norm(p - q, axis=-1)
    X = to_hyperboloid(model, p)
    Y = to_hyperboloid(model, q)
    k = model.kappa
    return np.arccosh(np.maximum(1.0, -k * k * lorentz(X, Y))) / k


def integrate_geodesic(model: SpaceFormModel, p, v, t: float, rtol: float = 1e-11, atol: float = 1e-13) -> t.Tuple[np.ndarray, np.ndarray]:
    """Numerical geodesic: solves x'' = -Gamma(x', x') from (p, v) up to time t.

    On the hyperboloid the geodesic equation is x'' = kappa^2 <x', x'>_L x.
    This is the independent check on exp_map and ideal_endpoint."""
    p = check_point(model, p)
    v = np.asarray(v, dtype=float)
    if p.ndim != 1:
        raise DomainError('integrate_geodesic takes one point at a time')
    D = p.shape[-1]
    def rhs(_, state):
        x, xdot = state[:D], state[D:]
        if model.kind == ModelKind.HYPERBOLOID:
            acc = model.kappa ** 2 * lorentz(xdot, xdot) * x
        else:
            gamma = christoffel(model, x)
            acc = -np.einsum('kij,i,j->k', gamma, xdot, xdot)
        return np.concatenate([xdot, acc])
    solution = solve_ivp(rhs, (0.0, t), np.concatenate([p, v]), method='DOP853', rtol=rtol, atol=atol)
    end = solution.y[:, -1]
    return end[:D], end[D:]


def rescale(model: SpaceFormModel, p, kappa: float) -> t.Tuple[SpaceFormModel, np.ndarray]:
    """The same chart with curvature -kappa**2, and where p lands.

    Ball and half-space coordinates carry over unchanged; hyperboloid
    coordinates scale by model.kappa / kappa. Distances scale by model.kappa / kappa
    and principal curvatures by kappa / model.kappa."""
    if not model.is_hyperbolic:
        raise DomainError('only hyperbolic models rescale')
    p = check_point(model, p)
    target = SpaceFormModel(model.kind, model.ambient_dim, kappa)
    if model.kind == ModelKind.HYPERBOLOID:
        return target, p * (model.kappa / kappa)
    return target, p.copy()
