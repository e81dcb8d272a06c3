"""Jets, unit normals, shape operators and principal curvatures of immersions S^n -> M."""
import logging
import typing as t

import numpy as np
from scipy.optimize import root

from .datamodels import (
    ChartPoint, CurvatureInterval, Immersion, Jet2Sample, ShapeData, SphereDiffeo,
)
from .errors import CurvatureIntervalError, DomainError, NotAnImmersionError
from .spaceforms import (
    ModelKind, SpaceFormModel, check_point, christoffel, conformal_factor,
    convert, lorentz, lorentz_matrix, metric_tensor,
)

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-3 # relative finite-difference step in chart coordinates
RANK_TOL = 1e-10 # relative smallest singular value below which d1 counts as singular
INTERVAL_TOL = 1e-9

# 4th-order central stencil for a first derivative: offset -> weight
_D1 = {-2: 1.0 / 12.0, -1: -8.0 / 12.0, 1: 8.0 / 12.0, 2: -1.0 / 12.0}
# 4th-order central stencil for a pure second derivative
_D2 = {-2: -1.0 / 12.0, -1: 16.0 / 12.0, 0: -30.0 / 12.0, 1: 16.0 / 12.0, 2: -1.0 / 12.0}


def _finite_difference_jet(f: Immersion, p: ChartPoint, step: float, order: int) -> Jet2Sample:
    """Central differences of f.eval in the chart; mixed partials use the product stencil."""
    x = p.x
    m, n = x.shape
    h = step * (1.0 + np.linalg.norm(x, axis=-1)) # (m,)
    offsets = [np.zeros(n)] # keys into the evaluation table below
    keys = [()]
    for i in range(n):
        for a in (-2, -1, 1, 2):
            e = np.zeros(n)
            e[i] = a
            offsets.append(e)
            keys.append(((i, a),))
    if order >= 2:
        for i in range(n):
            for j in range(i + 1, n):
                for a in (-2, -1, 1, 2):
                    for b in (-2, -1, 1, 2):
                        e = np.zeros(n)
                        e[i] = a
                        e[j] = b
                        offsets.append(e)
                        keys.append(((i, a), (j, b)))
    offsets = np.array(offsets) # (K, n)
    shifted = x[None, :, :] + offsets[:, None, :] * h[None, :, None] # (K, m, n)
    values = f.eval(ChartPoint(p.chart, shifted.reshape(-1, n)))
    values = values.reshape(len(keys), m, -1) # (K, m, D)
    table = dict(zip(keys, values))
    f0 = table[()]
    D = f0.shape[-1]
    d1 = np.empty((m, D, n))
    for i in range(n):
        d1[:, :, i] = sum(w * table[((i, a),)] for a, w in _D1.items()) / h[:, None]
    d2 = np.zeros((m, D, n, n))
    if order >= 2:
        for i in range(n):
            d2[:, :, i, i] = sum(
                w * (f0 if a == 0 else table[((i, a),)]) for a, w in _D2.items()
            ) / h[:, None] ** 2
            for j in range(i + 1, n):
                mixed = sum(
                    wa * wb * table[((i, a), (j, b))]
                    for a, wa in _D1.items() for b, wb in _D1.items()
                ) / h[:, None] ** 2
                d2[:, :, i, j] = mixed
                d2[:, :, j, i] = mixed
    return Jet2Sample(p, f0, d1, d2)


def jet(f: Immersion, p: ChartPoint, step: float = DEFAULT_STEP, *, order: int = 2, exact: bool = True) -> Jet2Sample:
    """The 2-jet of f at p: exact when the immersion carries one, finite differences otherwise.

    Parameters
    ----------
    step: float
        Relative step h = step * (1 + |x|) for the finite-difference stencils.
    order: int
        1 skips the second partials (d2 is left at zero).
    exact: bool
        False forces finite differences even when an exact jet exists.

    Raises
    ------
    NotAnImmersionError
        When d1 has (numerically) lower rank than n at some point.
    """
    if step <= 0.0:
        raise DomainError(f'step must be positive, got {step}')
    j = f.exact_jet(p) if exact else None
    if j is None:
        j = _finite_difference_jet(f, p, step, order)
    sigma = j.singular_values() # (m, n)
    sigma_min = sigma[:, -1]
    sigma_scale = np.maximum(sigma[:, 0], 1.0)
    bad = sigma_min <= RANK_TOL * sigma_scale
    if np.any(bad):
        k = int(np.argmax(bad))
        raise NotAnImmersionError(
            f'{f.name} is not an immersion here', float(sigma_min[k]),
            (p.chart.value, p.x[k].tolist()),
        )
    return j


def unit_normal(f: Immersion, j: Jet2Sample) -> np.ndarray:
    """The Gauss map nu at the jet's points, unit in the model metric.

    Sign: det[d1, nu] (conformal charts) or det[d1, nu, X] (hyperboloid) has the
    sign of the chart's orientation, so that a positively oriented chart frame
    followed by nu is positively oriented in M."""
    model = f.model
    value = check_point(model, j.value)
    d1 = j.d1
    m, D, n = d1.shape
    if model.kind == ModelKind.HYPERBOLOID:
        J = lorentz_matrix(D)
        rows = np.concatenate([np.swapaxes(d1, 1, 2) @ J, (value @ J)[:, None, :]], axis=1) # (m, n+1, D)
        nu = np.linalg.svd(rows)[2][:, -1, :]
        nu = nu / np.sqrt(np.maximum(lorentz(nu, nu), 1e-300))[:, None]
        frame = np.concatenate([d1, nu[:, :, None], value[:, :, None]], axis=2)
    else:
        nu = np.linalg.svd(d1)[0][:, :, -1]
        nu = nu / conformal_factor(model, value)[:, None]
        frame = np.concatenate([d1, nu[:, :, None]], axis=2)
    signs = np.sign(np.linalg.det(frame)) * j.at.orientation
    return nu * np.where(signs < 0.0, -1.0, 1.0)[:, None]


def _generalized_eigh(h: np.ndarray, g: np.ndarray) -> t.Tuple[np.ndarray, np.ndarray]:
    """Solves h v = lambda g v for stacks of symmetric h and SPD g via g = L L^T.

    Returns ascending eigenvalues and g-orthonormal eigenvectors (as columns)."""
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    A = Linv @ h @ np.swapaxes(Linv, -1, -2)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    w, V = np.linalg.eigh(A)
    return w, np.swapaxes(Linv, -1, -2) @ V


def shape_data(f: Immersion, p: ChartPoint, step: float = DEFAULT_STEP, *, exact: bool = True) -> ShapeData:
    """Induced metric, second fundamental form, shape operator and principal curvatures.

    h_ij = <nu, d2_ij + Gamma(d1_i, d1_j)> = -<nabla_i nu, d1_j>, S = g^{-1} h."""
    j = jet(f, p, step, exact=exact)
    nu = unit_normal(f, j)
    G = metric_tensor(f.model, j.value)
    gamma = christoffel(f.model, j.value)
    g = np.einsum('mai,mab,mbj->mij', j.d1, G, j.d1)
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    acc = j.d2 + np.einsum('mkab,mai,mbj->mkij', gamma, j.d1, j.d1)
    h = np.einsum('ma,mab,mbij->mij', nu, G, acc)
    h = 0.5 * (h + np.swapaxes(h, -1, -2))
    try:
        lambdas, directions = _generalized_eigh(h, g)
    except np.linalg.LinAlgError as e:
        raise NotAnImmersionError(f'induced metric of {f.name} is not positive definite', 0.0, (p.chart.value,)) from e
    S = np.linalg.solve(g, h)
    return ShapeData(p, g, h, S, lambdas, directions, nu)


def gaussian_curvature(sd: ShapeData) -> np.ndarray:
    """Gauss-Kronecker curvature, the product of the principal curvatures."""
    return np.prod(sd.lambdas, axis=-1)


def on_sphere(q, fn: t.Callable[[ChartPoint], t.Sequence[np.ndarray]]) -> t.List[np.ndarray]:
    """Runs fn on the chart batches covering sphere points q and stitches the results.

    fn returns a sequence of arrays with leading axis m; the output arrays are
    indexed like q."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    outputs = None
    for cp, idx in ChartPoint.cover(q):
        parts = fn(cp)
        if outputs is None:
            outputs = [np.empty((q.shape[0],) + np.shape(a)[1:]) for a in parts]
        for out, a in zip(outputs, parts):
            out[idx] = a
    return outputs


def normal_on_sphere(f: Immersion, q, step: float = DEFAULT_STEP) -> t.Tuple[np.ndarray, np.ndarray]:
    """Value and unit normal of f at sphere points q (first-order jets only)."""
    def fn(cp):
        j = jet(f, cp, step, order=1)
        return j.value, unit_normal(f, j)
    value, nu = on_sphere(q, fn)
    return value, nu


def shape_on_sphere(f: Immersion, q, step: float = DEFAULT_STEP) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Principal curvatures (m, n), normals (m, D) and values (m, D) at sphere points q."""
    def fn(cp):
        sd = shape_data(f, cp, step)
        return sd.lambdas, sd.normal, f.eval(cp)
    lambdas, nu, value = on_sphere(q, fn)
    return lambdas, nu, value


class ShapeField:
    """Principal curvatures, normals and immersivity margins sampled on a mesh."""
    lambdas: np.ndarray # (V, n)
    normals: np.ndarray # (V, D)
    values: np.ndarray # (V, D)
    sigma_min: np.ndarray # (V,) smallest singular value of d1 in the model metric
    def __init__(self, lambdas, normals, values, sigma_min):
        self.lambdas = lambdas
        self.normals = normals
        self.values = values
        self.sigma_min = sigma_min
    @property
    def gaussian(self) -> np.ndarray:
        return np.prod(self.lambdas, axis=-1)


def shape_field(f: Immersion, mesh, step: float = DEFAULT_STEP) -> ShapeField:
    """shape_data over every vertex of a SphereMesh."""
    def fn(cp):
        sd = shape_data(f, cp, step)
        sigma = np.sqrt(np.linalg.eigvalsh(sd.g)[:, 0])
        return sd.lambdas, sd.normal, f.eval(cp), sigma
    lambdas, nu, value, sigma = on_sphere(mesh.vertices, fn)
    return ShapeField(lambdas, nu, value, sigma)


class CurvatureRange:
    """Extremal sampled principal curvatures, and where they occur."""
    lo: float
    hi: float
    argmin: np.ndarray # sphere point
    argmax: np.ndarray
    interval: CurvatureInterval | None
    inside: bool | None
    margin: float | None # min over samples of the signed distance to the complement of I
    def __init__(self, lo, hi, argmin, argmax, interval=None, inside=None, margin=None):
        self.lo = lo
        self.hi = hi
        self.argmin = argmin
        self.argmax = argmax
        self.interval = interval
        self.inside = inside
        self.margin = margin
    def as_json(self) -> dict:
        return {
            'lo': self.lo, 'hi': self.hi,
            'argmin': self.argmin.tolist(), 'argmax': self.argmax.tolist(),
            'interval': None if self.interval is None else str(self.interval),
            'inside': self.inside, 'margin': self.margin,
        }
    def __repr__(self):
        return f'''<CurvatureRange [{self.lo:.6g}, {self.hi:.6g}] inside={self.inside}>'''


def curvature_range(f: Immersion, mesh, interval: CurvatureInterval | None = None, *, step: float = DEFAULT_STEP, tol: float = INTERVAL_TOL, field: ShapeField | None = None) -> CurvatureRange:
    """Min and max sampled principal curvature, with a membership verdict for I."""
    if field is None:
        field = shape_field(f, mesh, step)
    lam = field.lambdas
    lo_idx = int(np.argmin(lam[:, 0]))
    hi_idx = int(np.argmax(lam[:, -1]))
    lo = float(lam[lo_idx, 0])
    hi = float(lam[hi_idx, -1])
    result = CurvatureRange(lo, hi, mesh.vertices[lo_idx], mesh.vertices[hi_idx])
    if interval is not None:
        result.interval = interval
        result.inside = bool(np.all(interval.contains(lam, tol)))
        result.margin = float(np.min(interval.margin(lam)))
    return result


def require_in_interval(f: Immersion, mesh, interval: CurvatureInterval, **kwargs) -> CurvatureRange:
    """curvature_range, raising CurvatureIntervalError on the worst offender."""
    result = curvature_range(f, mesh, interval, **kwargs)
    if not result.inside:
        worst, where = (result.lo, result.argmin) if interval.margin(result.lo) < interval.margin(result.hi) else (result.hi, result.argmax)
        raise CurvatureIntervalError(f'{f.name} leaves {interval}', worst, float(interval.margin(worst)), where.tolist())
    return result


def compose_with_diffeo(f: Immersion, g: SphereDiffeo) -> Immersion:
    """f o g. Exact jets carry over by the chain rule when f has them."""
    ambient_jet = None
    if f.ambient_jet is not None:
        def ambient_jet(q):
            G, DG, D2G = g.jet(q)
            F, DF, D2F = f.ambient_jet(G)
            d1 = np.einsum('mdk,mkb->mdb', DF, DG)
            d2 = np.einsum('mdkl,mkb,mlc->mdbc', D2F, DG, DG) + np.einsum('mdk,mkbc->mdbc', DF, D2G)
            return F, d1, d2
    return Immersion(
        f.model, lambda q: f.sphere_eval(g(q)), ambient_jet=ambient_jet,
        name=f'{f.name}*{g.name}', params={**f.params, 'composed_with': g.name},
    )


def composed_curvature_prediction(f: Immersion, g: SphereDiffeo, p: ChartPoint, step: float = DEFAULT_STEP) -> np.ndarray:
    """deg(g) * (lambda_f o g), sorted ascending: what f o g must have at p."""
    lambdas, _, _ = shape_on_sphere(f, g(p.sphere_points()), step)
    return np.sort(g.degree * lambdas, axis=-1)


def in_model(f: Immersion, target: SpaceFormModel) -> Immersion:
    """f followed by the chart change to `target` (no exact jet)."""
    if target == f.model:
        return f
    source = f.model
    return Immersion(
        target, lambda q: convert(f.sphere_eval(q), source, target),
        name=f'{f.name}@{target.kind.value}', params=dict(f.params),
    )


def shape_operator_from_normal_derivative(f: Immersion, p: ChartPoint, step: float = DEFAULT_STEP) -> np.ndarray:
    """S = -df^{-1} d(nu), with d(nu) by central differences of unit_normal (Euclidean space)."""
    if f.model.kind != ModelKind.EUCLIDEAN:
        raise DomainError('the normal-derivative form of S needs Euclidean space')
    x = p.x
    m, n = x.shape
    h = step * (1.0 + np.linalg.norm(x, axis=-1))
    j0 = jet(f, p, step, order=1)
    dnu = np.zeros_like(j0.d1)
    for i in range(n):
        for a, w in _D1.items():
            shifted = x.copy()
            shifted[:, i] += a * h
            cp = ChartPoint(p.chart, shifted)
            dnu[:, :, i] += w * unit_normal(f, jet(f, cp, step, order=1))
        dnu[:, :, i] /= h[:, None]
    return -np.linalg.pinv(j0.d1) @ dnu


def normal_section_curvature(f: Immersion, p: ChartPoint, u, *, spread: float = 2e-3) -> float:
    """Curvature at f(p) of the curve cut from f by the plane through f(p) spanned by df(u) and nu.

    Positive when the curve bends towards nu. Euclidean space, one point at a time."""
    if f.model.kind != ModelKind.EUCLIDEAN:
        raise DomainError('normal sections are traced in Euclidean space')
    if len(p) != 1:
        raise DomainError('normal_section_curvature takes a single chart point')
    u = np.asarray(u, dtype=float)
    j = jet(f, p, order=1)
    nu = unit_normal(f, j)[0]
    d1 = j.d1[0]
    f0 = j.value[0]
    T = d1 @ u
    T = T / np.linalg.norm(T)
    # directions in the chart complementary to u, and ambient directions off the plane
    complement = np.linalg.svd(u[None, :])[2][1:] # (n-1, n)
    basis = np.linalg.svd(np.stack([T, nu]))[2][2:] # (N-2, N)
    x0 = p.x[0]
    def cut(tt):
        def residual(c):
            y = x0 + tt * u + c @ complement
            return basis @ (f.eval(ChartPoint(p.chart, y))[0] - f0)
        solution = root(residual, np.zeros(len(complement)), tol=1e-14)
        y = x0 + tt * u + solution.x @ complement
        d = f.eval(ChartPoint(p.chart, y))[0] - f0
        return d @ T, d @ nu
    ts = spread * np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0]) / np.linalg.norm(u)
    pts = np.array([cut(tt) for tt in ts])
    # b(a) = k a^2 / 2 + O(a^3), b(0) = 0: quartic fit with no constant term, in a scaled by spread
    a = pts[:, 0] / spread
    design = np.stack([a ** k for k in range(1, 5)], axis=1)
    coeffs = np.linalg.lstsq(design, pts[:, 1], rcond=None)[0]
    return float(2.0 * coeffs[1] / spread ** 2)
