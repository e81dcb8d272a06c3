"""Explicit curvature-constrained deformations of immersed spheres.

Every path is a DeformationPath: path.at(s) is an Immersion, and s = 0 gives
back the source immersion itself.
"""
import enum
import logging
import math
import typing as t

import numpy as np

from .datamodels import ChartPoint, CurvatureInterval, Immersion, IntervalClass, reflection
from .errors import DeformationError, DomainError
from .gaussmaps import GaussKind, visual_gauss
from .immersions import compose_with_diffeo, normal_on_sphere, on_sphere, shape_field, shape_on_sphere
from .meshes import SphereMesh
from .spaceforms import (
    ModelKind, SpaceFormModel, check_point, from_hyperboloid, push_to_hyperboloid, to_hyperboloid,
)
from .trackers import track

logger = logging.getLogger(__name__)

R_MAX = 8.0 # cap on the normal-flow distance of the overlap path
S_STAR = 2.0 / math.pi * math.atan(R_MAX) # r(s) = tan(pi s S_STAR / 2) reaches R_MAX at s = 1
TAU_SEARCH_STEPS = 20
FLOW_CHECK_LEVEL = 1 # mesh level of the up-front focal-point check in normal_flow


class PathKind(str, enum.Enum):
    NORMAL_FLOW = 'NormalFlow'
    EUCLIDEAN_RETRACTION = 'EuclideanRetraction'
    HALFSPACE_RETRACTION = 'HalfSpaceRetraction'
    OVERLAP_PATH = 'OverlapPath'


def round_sphere(model: SpaceFormModel, mu: float) -> Immersion:
    """The round sphere with every principal curvature equal to mu, with exact jets.

    Euclidean: q -> -q / mu for mu < 0. HalfSpace: c + r q with m = mu / kappa,
    r = -1 / (m + 1), c = m / (m + 1) e_N, for mu < -kappa. Ball: a q with
    a = tanh(arccoth(-mu / kappa) / 2). Hyperboloid: the same sphere about the basepoint.
    The other sign of mu comes from composing with a reflection of S^n."""
    mu = float(mu)
    kappa = model.kappa
    N = model.ambient_dim
    if model.kind == ModelKind.EUCLIDEAN:
        if mu == 0.0:
            raise DomainError('no round sphere has curvature 0')
        if mu > 0.0:
            return _reflected(round_sphere(model, -mu), mu)
    elif not abs(mu) > kappa:
        raise DomainError(f'hyperbolic round spheres have |mu| > kappa = {kappa:g}, got {mu}')
    elif mu > 0.0:
        return _reflected(round_sphere(model, -mu), mu)
    D = model.coord_dim
    if model.kind == ModelKind.EUCLIDEAN:
        A, b = -np.eye(N) / mu, np.zeros(N)
    elif model.kind == ModelKind.HALFSPACE:
        m = mu / kappa
        A = -np.eye(N) / (m + 1.0)
        b = np.zeros(N)
        b[-1] = m / (m + 1.0)
    elif model.kind == ModelKind.BALL:
        a = math.tanh(0.5 * math.atanh(-kappa / mu))
        A, b = a * np.eye(N), np.zeros(N)
    else:
        radius = math.atanh(-kappa / mu) # kappa times the hyperbolic radius
        A = np.zeros((D, N))
        A[:N, :N] = math.sinh(radius) / kappa * np.eye(N)
        b = np.zeros(D)
        b[-1] = math.cosh(radius) / kappa
    def sphere_eval(q):
        return q @ A.T + b
    def ambient_jet(q):
        m = q.shape[0]
        return sphere_eval(q), np.broadcast_to(A, (m, D, N)).copy(), np.zeros((m, D, N, N))
    return Immersion(model, sphere_eval, ambient_jet=ambient_jet, name=f'round_sphere({mu:g})', params={'mu': mu})


def _reflected(f: Immersion, mu: float) -> Immersion:
    g = compose_with_diffeo(f, reflection(f.model.ambient_dim))
    g.name = f'round_sphere({mu:g})'
    g.params = {'mu': mu}
    return g


def switch_side(f: Immersion, interval: CurvatureInterval | None = None) -> t.Tuple[Immersion, CurvatureInterval | None]:
    """f o rho and -I: principal curvatures change sign, in any model."""
    g = compose_with_diffeo(f, reflection(f.model.ambient_dim))
    return g, None if interval is None else interval.negate()


def curvature_flow_value(lam, r, kappa: float = 1.0):
    """Principal curvature after flowing a distance r along the normal geodesics.

    kappa (lam / kappa - tanh(kappa r)) / (1 - (lam / kappa) tanh(kappa r)); needs lam < kappa."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam >= kappa):
        worst = np.unravel_index(int(np.argmax(lam)), lam.shape)
        raise DomainError(f'the normal-flow curvature law needs lambda < kappa = {kappa:g}, got {lam[worst]:.9g} at sample {worst[0] if worst else 0}')
    T = np.tanh(kappa * np.asarray(r, dtype=float))
    x = lam / kappa
    return kappa * (x - T) / (1.0 - x * T)


def _flow_points(f: Immersion, q, r: float) -> np.ndarray:
    lam, nu, value = shape_on_sphere(f, q)
    model = f.model
    k = model.kappa
    if r > 0.0:
        factor = math.cosh(k * r) - np.max(lam, axis=-1) / k * math.sinh(k * r)
        worst = int(np.argmin(factor))
        if factor[worst] <= 0.0:
            raise DeformationError(
                f'normal flow reaches a focal point at q={np.round(np.atleast_2d(q)[worst], 6).tolist()}',
                s=r, value=float(np.max(lam[worst])), margin=float(factor[worst]),
            )
    X = to_hyperboloid(model, value)
    V = push_to_hyperboloid(model, value, nu)
    return from_hyperboloid(model, math.cosh(k * r) * X + math.sinh(k * r) / k * V)


def normal_flow(f: Immersion, r: float, mesh=None) -> Immersion:
    """f_r: q -> exp(f(q), r nu_f(q)), computed on the hyperboloid.

    The immersion factor cosh(kappa r) - (lambda / kappa) sinh(kappa r) is checked
    on the mesh (a coarse one by default) up front, and again wherever f_r is evaluated."""
    if not f.model.is_hyperbolic:
        raise DomainError('normal flow is defined in hyperbolic space')
    r = float(r)
    if r < 0.0:
        raise DomainError(f'flow distance must be nonnegative, got {r}')
    if r == 0.0:
        return f
    k = f.model.kappa
    if mesh is None:
        mesh = SphereMesh.for_dimension(f.n, FLOW_CHECK_LEVEL)
    lam = shape_field(f, mesh).lambdas
    factor = math.cosh(k * r) - lam / k * math.sinh(k * r)
    worst = np.unravel_index(int(np.argmin(factor)), factor.shape)
    if factor[worst] <= 0.0:
        raise DeformationError(f'normal flow reaches a focal point before r = {r:g}', s=r, value=float(lam[worst]), margin=float(factor[worst]))
    return Immersion(
        f.model, lambda q: _flow_points(f, q, r),
        name=f'{f.name}_r{r:g}', params={**f.params, 'flow': r},
    )


class DeformationPath:
    """A one-parameter family s -> f_s of immersions with f_0 = source.

    Instantiate through euclidean_retraction, halfspace_retraction,
    normal_flow_path or overlap_path. gauss is the Gauss map the
    construction keeps fixed (None when nothing is)."""
    kind: PathKind
    source: Immersion
    mu: float | None
    interval: CurvatureInterval | None
    s_max: float
    gauss: GaussKind | None
    params: dict
    _evaluate: t.Callable[[float, np.ndarray], np.ndarray]
    _predict: t.Callable[[float, np.ndarray], np.ndarray] | None
    def __init__(self, kind, source, evaluate, *, mu=None, interval=None, s_max=1.0, gauss=None, predict=None, params=None):
        self.kind = PathKind(kind)
        self.source = source
        self._evaluate = evaluate
        self._predict = predict
        self.mu = mu
        self.interval = interval
        self.s_max = float(s_max)
        self.gauss = gauss
        self.params = dict(params or {})
    @property
    def model(self) -> SpaceFormModel:
        return self.source.model
    @property
    def has_formula(self) -> bool:
        return self._predict is not None
    def _check_s(self, s: float) -> float:
        s = float(s)
        if not 0.0 <= s <= self.s_max:
            raise DomainError(f'{self.kind.value} is parametrized by [0, {self.s_max:g}], got s={s}')
        return s
    def evaluate(self, s: float, p: ChartPoint) -> np.ndarray:
        return self.at(s).eval(p)
    def at(self, s: float) -> Immersion:
        s = self._check_s(s)
        if s == 0.0:
            return self.source
        source = self.source
        def sphere_eval(q, s=s):
            return self._evaluate(s, q)
        return Immersion(source.model, sphere_eval, name=f'{self.kind.value}({source.name})@{s:.6g}', params={**self.params, 's': s})
    def predicted_curvatures(self, s: float, q) -> np.ndarray | None:
        """Sorted closed-form spectrum of f_s at sphere points q, when the construction has one."""
        if self._predict is None:
            return None
        s = self._check_s(s)
        return np.sort(self._predict(s, np.atleast_2d(np.asarray(q, dtype=float))), axis=-1)
    def __repr__(self):
        return f'''<DeformationPath kind={self.kind.value} source={self.source.name} mu={self.mu}>'''


def predicted_curvatures(path: DeformationPath, s: float, q) -> np.ndarray | None:
    return path.predicted_curvatures(s, q)


def _switched(path_builder, f: Immersion, mu: float, interval: CurvatureInterval, **kwargs) -> DeformationPath:
    """Runs the I < 0 construction on f o rho and composes each f_s with rho again."""
    rho = reflection(f.model.ambient_dim)
    g, flipped = switch_side(f, interval)
    inner = path_builder(g, -mu, flipped, **kwargs)
    def evaluate(s, q):
        return inner.at(s).sphere_eval(rho(q))
    predict = None
    if inner.has_formula:
        def predict(s, q):
            return -inner.predicted_curvatures(s, rho(q))
    return DeformationPath(
        inner.kind, f, evaluate, mu=mu, interval=interval, s_max=inner.s_max,
        gauss=inner.gauss, predict=predict, params={**inner.params, 'switched': True},
    )


def _require_interval(interval: CurvatureInterval, mu: float) -> None:
    if not interval.contains(mu, tol=0.0):
        raise DeformationError(f'target curvature is outside {interval}', s=0.0, value=mu)


def euclidean_retraction(f: Immersion, mu: float, interval: CurvatureInterval | None = None) -> DeformationPath:
    """f_s = (1 - s) f + s sigma(nu_f), sigma the round sphere of curvature mu.

    Along the path nu_{f_s} = nu_f and each principal curvature moves as
    [(1 - s) / lambda + s / mu]^-1. I > 0 runs through switch_side."""
    if f.model.kind != ModelKind.EUCLIDEAN:
        raise DomainError('euclidean_retraction needs Euclidean space')
    mu = float(mu)
    if interval is None:
        interval = CurvatureInterval(-math.inf, 0.0) if mu < 0.0 else CurvatureInterval(0.0, math.inf)
    _require_interval(interval, mu)
    if interval.above(0.0):
        return _switched(euclidean_retraction, f, mu, interval)
    if not interval.below(0.0):
        raise DeformationError(f'{interval} must not contain 0', s=0.0)
    def evaluate(s, q):
        value, nu = normal_on_sphere(f, q)
        return (1.0 - s) * value - (s / mu) * nu
    def predict(s, q):
        lam = shape_on_sphere(f, q)[0]
        return 1.0 / ((1.0 - s) / lam + s / mu)
    return DeformationPath(
        PathKind.EUCLIDEAN_RETRACTION, f, evaluate, mu=mu, interval=interval,
        gauss=GaussKind.EUCLIDEAN, predict=predict, params={'mu': mu},
    )


def halfspace_retraction(f: Immersion, mu: float, interval: CurvatureInterval | None = None) -> DeformationPath:
    """f_s = (1 - s) f + s sigma(nu_bar_f) in half-space coordinates.

    The flat Gauss map is constant along s; each principal curvature moves as
    ((1 - s) lambda + s rho mu) / ((1 - s) + s rho) with
    rho = r (nu_bar^N - lambda / kappa) / f^N > 0. I > kappa runs through switch_side."""
    if f.model.kind != ModelKind.HALFSPACE:
        raise DomainError('halfspace_retraction needs the half-space model')
    kappa = f.model.kappa
    mu = float(mu)
    if interval is None:
        interval = CurvatureInterval(-math.inf, -kappa) if mu < 0.0 else CurvatureInterval(kappa, math.inf)
    _require_interval(interval, mu)
    if interval.above(kappa):
        return _switched(halfspace_retraction, f, mu, interval)
    if not interval.below(-kappa):
        raise DeformationError(f'{interval} must lie below -kappa = {-kappa:g}', s=0.0)
    sigma = round_sphere(f.model, mu)
    m = mu / kappa
    radius = -1.0 / (m + 1.0)
    def flat(value, nu):
        return nu / (kappa * value[:, -1:])
    def evaluate(s, q):
        value, nu = normal_on_sphere(f, q)
        return (1.0 - s) * value + s * sigma.sphere_eval(flat(value, nu))
    def predict(s, q):
        lam, nu, value = shape_on_sphere(f, q)
        nu_bar = flat(value, nu)
        rho = radius * (nu_bar[:, -1:] - lam / kappa) / value[:, -1:]
        return ((1.0 - s) * lam + s * rho * mu) / ((1.0 - s) + s * rho)
    return DeformationPath(
        PathKind.HALFSPACE_RETRACTION, f, evaluate, mu=mu, interval=interval,
        gauss=GaussKind.FLAT, predict=predict, params={'mu': mu},
    )


def normal_flow_path(f: Immersion, r_end: float, interval: CurvatureInterval | None = None) -> DeformationPath:
    """s -> f_{s r_end}; the visual Gauss map is constant along it."""
    if not f.model.is_hyperbolic:
        raise DomainError('normal flow is defined in hyperbolic space')
    kappa = f.model.kappa
    r_end = float(r_end)
    if interval is not None and not interval.below(kappa):
        raise DeformationError(f'{interval} must lie below kappa = {kappa:g}', s=0.0)
    def evaluate(s, q):
        return _flow_points(f, q, s * r_end)
    def predict(s, q):
        lam = shape_on_sphere(f, q)[0]
        return curvature_flow_value(lam, s * r_end, kappa)
    return DeformationPath(
        PathKind.NORMAL_FLOW, f, evaluate, interval=interval,
        gauss=GaussKind.VISUAL, predict=predict, params={'r_end': r_end},
    )


def flow_radius(s: float) -> float:
    """r(s) = tan(pi s S_STAR / 2), equal to R_MAX at s = 1."""
    return math.tan(0.5 * math.pi * s * S_STAR)


def overlap_path(f: Immersion, mu: float, tau: float, interval: CurvatureInterval | None = None) -> DeformationPath:
    """Ball-model path from f to the round sphere of curvature mu, through curvatures near -kappa.

    s in [0, 1]: the homothety x -> tau(s) x applied to f_{r(s)}, tau(s) = 1 + s (tau - 1).
    s in (1, 2], t = s - 1: scale(t) [(1 - t) f_{R_MAX} + t nu_hat_f],
    scale(t) = (1 - t) tau + t a_mu, a_mu the radius of the round sphere of curvature mu."""
    if f.model.kind != ModelKind.BALL:
        raise DomainError('overlap_path needs the ball model')
    kappa = f.model.kappa
    mu = float(mu)
    tau = float(tau)
    if not mu < -kappa:
        raise DomainError(f'overlap_path ends on a round sphere with mu < -kappa, got {mu}')
    if not 0.5 <= tau < 1.0:
        raise DomainError(f'tau must lie in [1/2, 1), got {tau}')
    if interval is not None:
        if interval.classify(kappa) != IntervalClass.OVERLAPS or not interval.below(kappa):
            raise DeformationError(f'{interval} must overlap [-kappa, kappa] and lie below kappa', s=0.0)
        _require_interval(interval, mu)
    a_mu = math.tanh(0.5 * math.atanh(-kappa / mu))
    def evaluate(s, q):
        if s <= 1.0:
            r = min(flow_radius(s), R_MAX)
            return (1.0 + s * (tau - 1.0)) * _flow_points(f, q, r)
        t_ = s - 1.0
        far = _flow_points(f, q, R_MAX)
        ends = on_sphere(q, lambda cp: [visual_gauss(f, cp).coords])[0]
        scale = (1.0 - t_) * tau + t_ * a_mu
        return check_point(f.model, scale * ((1.0 - t_) * far + t_ * ends))
    return DeformationPath(
        PathKind.OVERLAP_PATH, f, evaluate, mu=mu, interval=interval, s_max=2.0,
        params={'mu': mu, 'tau': tau, 'r_max': R_MAX},
    )


def overlap_taus(steps: int = TAU_SEARCH_STEPS) -> t.List[float]:
    """tau_k = 1 - 2^-k / 2 for k = 0 .. steps."""
    return [1.0 - 0.5 * 2.0 ** -k for k in range(steps + 1)]


def search_overlap_tau(f: Immersion, mu: float, interval: CurvatureInterval, mesh, *, steps: int = 33, max_k: int = TAU_SEARCH_STEPS, verbose: bool = False, **track_kwargs):
    """First tau_k whose tracked overlap path stays in I. Returns (tau, report).

    Raises DeformationError carrying the last failure when every tau_k up to
    max_k fails."""
    last = None
    for k, tau in enumerate(overlap_taus(max_k)):
        if verbose:
            print(f'Searching tau:{k + 1}/{max_k + 1}:tau={tau:.9f}')
        path = overlap_path(f, mu, tau, interval)
        report = track(path, mesh, steps, interval, verbose=verbose, **track_kwargs)
        if report.passed:
            logger.info('overlap path stays in %s with tau=%.9f (k=%d)', interval, tau, k)
            report.params['tau_k'] = k
            return tau, report
        last = report.first_failure
        logger.info('tau=%.9f fails at s=%s', tau, None if last is None else last.s)
    raise DeformationError(
        f'no tau_k with k <= {max_k} keeps the overlap path in {interval}',
        s=None if last is None else last.s,
        value=None if last is None else last.worst_lambda,
        margin=None if last is None else last.margin,
    )
