import enum
import itertools
import math
import typing as t

import numpy as np

from .errors import DomainError
from .spaceforms import SpaceFormModel

id_seq = itertools.count(0)


class Chart(str, enum.Enum):
    # Stereographic projection from +e_N (North) or -e_N (South).
    NORTH = 'North'
    SOUTH = 'South'


# sign of det[dP, P]: South agrees with the orientation of S^n, North reverses it
CHART_ORIENTATION = {Chart.SOUTH: 1, Chart.NORTH: -1}


def stereographic(chart: Chart | str, x) -> t.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse stereographic parametrization P of S^n and its first two derivatives.

    x has shape (m, n). Returns P (m, N), dP (m, N, n), d2P (m, N, n, n).
    South: P(x) = (2x, 1 - |x|^2) / (1 + |x|^2); North flips the last coordinate."""
    chart = Chart(chart)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m, n = x.shape
    s = 1.0 + np.sum(x * x, axis=-1)
    eye = np.eye(n)
    P = np.empty((m, n + 1))
    P[:, :n] = 2.0 * x / s[:, None]
    P[:, n] = 1.0 - 2.0 / s # North convention before the flip below
    dP = np.empty((m, n + 1, n))
    dP[:, :n, :] = 2.0 * eye / s[:, None, None] - 4.0 * np.einsum('mi,mj->mij', x, x) / s[:, None, None] ** 2
    dP[:, n, :] = 4.0 * x / s[:, None] ** 2
    d2P = np.empty((m, n + 1, n, n))
    d2P[:, :n, :, :] = (
        -4.0 * (
            np.einsum('ij,mk->mijk', eye, x)
            + np.einsum('ik,mj->mijk', eye, x)
            + np.einsum('jk,mi->mijk', eye, x)
        ) / s[:, None, None, None] ** 2
        + 16.0 * np.einsum('mi,mj,mk->mijk', x, x, x) / s[:, None, None, None] ** 3
    )
    d2P[:, n, :, :] = 4.0 * eye / s[:, None, None] ** 2 - 16.0 * np.einsum('mj,mk->mjk', x, x) / s[:, None, None] ** 3
    if chart == Chart.SOUTH:
        P[:, n] *= -1.0
        dP[:, n, :] *= -1.0
        d2P[:, n, :, :] *= -1.0
    return P, dP, d2P


class ChartPoint:
    """One or more points of a single stereographic chart.

    x always has shape (m, n); a single point is a batch of one."""
    chart: Chart
    x: np.ndarray
    def __init__(self, chart: Chart | str, x):
        self.chart = Chart(chart)
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2:
            raise DomainError(f'chart coordinates must be (m, n), got shape {x.shape}')
        self.x = x
    @property
    def n(self) -> int:
        return self.x.shape[1]
    @property
    def orientation(self) -> int:
        return CHART_ORIENTATION[self.chart]
    def sphere_points(self) -> np.ndarray:
        return stereographic(self.chart, self.x)[0]
    def transition(self) -> 'ChartPoint':
        """The same points in the other chart: x -> x / |x|^2."""
        r2 = np.sum(self.x * self.x, axis=-1, keepdims=True)
        if np.any(r2 == 0.0):
            raise DomainError('the pole is not covered by the other chart')
        other = Chart.NORTH if self.chart == Chart.SOUTH else Chart.SOUTH
        return ChartPoint(other, self.x / r2)
    @classmethod
    def from_sphere(cls, chart: Chart | str, q) -> 'ChartPoint':
        """Chart coordinates of sphere points q (m, N)."""
        chart = Chart(chart)
        q = np.atleast_2d(np.asarray(q, dtype=float))
        sign = 1.0 if chart == Chart.SOUTH else -1.0
        denom = 1.0 + sign * q[:, -1]
        if np.any(denom <= 0.0):
            raise DomainError(f'the {chart.value} chart does not cover its projection pole')
        return cls(chart, q[:, :-1] / denom[:, None])
    @classmethod
    def cover(cls, q) -> t.List[t.Tuple['ChartPoint', np.ndarray]]:
        """Split sphere points between the charts: South for q_N >= 0, North below.

        Returns [(chart_point, indices into q), ...]; every chart point has |x| <= 1."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        batches = []
        upper = q[:, -1] >= 0.0
        for chart, mask in ((Chart.SOUTH, upper), (Chart.NORTH, ~upper)):
            idx = np.nonzero(mask)[0]
            if idx.size:
                batches.append((cls.from_sphere(chart, q[idx]), idx))
        return batches
    def __len__(self):
        return self.x.shape[0]
    def __getitem__(self, idx) -> 'ChartPoint':
        return ChartPoint(self.chart, np.atleast_2d(self.x[idx]))
    def __repr__(self):
        return f'''<ChartPoint chart={self.chart.value} count={len(self)} n={self.n}>'''


class Jet2Sample:
    """Value, first and second chart derivatives of an immersion at chart points.

    value (m, D), d1 (m, D, n) with d1[:, :, i] = df/dx_i,
    d2 (m, D, n, n) symmetric in the last two axes."""
    at: ChartPoint
    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    def __init__(self, at: ChartPoint, value, d1, d2):
        self.at = at
        self.value = np.asarray(value, dtype=float)
        self.d1 = np.asarray(d1, dtype=float)
        self.d2 = np.asarray(d2, dtype=float)
    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.d2 - np.swapaxes(self.d2, -1, -2)), initial=0.0))
    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.d1, compute_uv=False)
    def __repr__(self):
        return f'''<Jet2Sample chart={self.at.chart.value} count={len(self.at)}>'''


AmbientJet = t.Callable[[np.ndarray], t.Tuple[np.ndarray, np.ndarray, np.ndarray]]


class Immersion:
    """A map S^n -> M, evaluated on points of the unit sphere in R^N.

    sphere_eval takes sphere points (m, N) to model coordinates (m, D).
    ambient_jet, when given, returns (F, DF, D2F) of some extension F of the map
    to a neighborhood of the sphere: shapes (m, D), (m, D, N), (m, D, N, N).
    Exact chart jets follow from it by the chain rule.

    Orientation is never stored: the Gauss map is always the one making
    (df(u_1), ..., df(u_n), nu) positive whenever (u_1, ..., u_n, p) is."""
    oid: int
    model: SpaceFormModel
    name: str
    sphere_eval: t.Callable[[np.ndarray], np.ndarray]
    ambient_jet: AmbientJet | None
    params: dict # constructor parameters, for manifests and reports
    def __init__(
        self,
        model: SpaceFormModel,
        sphere_eval: t.Callable[[np.ndarray], np.ndarray],
        *,
        ambient_jet: AmbientJet | None = None,
        name: str = 'immersion',
        params: dict | None = None,
    ):
        self.oid = next(id_seq)
        self.model = model
        self.sphere_eval = sphere_eval
        self.ambient_jet = ambient_jet
        self.name = name
        self.params = dict(params or {})
    @property
    def n(self) -> int:
        return self.model.n
    @property
    def has_exact_jet(self) -> bool:
        return self.ambient_jet is not None
    def eval(self, p: ChartPoint) -> np.ndarray:
        return np.asarray(self.sphere_eval(p.sphere_points()), dtype=float)
    def __call__(self, p: ChartPoint) -> np.ndarray:
        return self.eval(p)
    def exact_jet(self, p: ChartPoint) -> Jet2Sample | None:
        if self.ambient_jet is None:
            return None
        P, dP, d2P = stereographic(p.chart, p.x)
        F, DF, D2F = self.ambient_jet(P)
        d1 = np.einsum('mdk,mki->mdi', DF, dP)
        d2 = np.einsum('mdkl,mki,mlj->mdij', D2F, dP, dP) + np.einsum('mdk,mkij->mdij', DF, d2P)
        return Jet2Sample(p, F, d1, d2)
    def __repr__(self):
        return f'''<Immersion name={self.name} model={self.model.kind.value} n={self.n}>'''


class SphereDiffeo:
    """A diffeomorphism g of S^n given by an extension G to R^N with jets.

    jet(q) returns (G, DG, D2G) with shapes (m, N), (m, N, N), (m, N, N, N)."""
    name: str
    degree: int
    jet: t.Callable[[np.ndarray], t.Tuple[np.ndarray, np.ndarray, np.ndarray]]
    def __init__(self, name: str, degree: int, jet):
        self.name = name
        self.degree = int(degree)
        self.jet = jet
    def __call__(self, q) -> np.ndarray:
        return self.jet(np.atleast_2d(np.asarray(q, dtype=float)))[0]
    @classmethod
    def linear(cls, name: str, A) -> 'SphereDiffeo':
        """q -> A q for an orthogonal matrix A; degree is det A."""
        A = np.asarray(A, dtype=float)
        N = A.shape[0]
        def jet(q):
            m = q.shape[0]
            return q @ A.T, np.broadcast_to(A, (m, N, N)).copy(), np.zeros((m, N, N, N))
        return cls(name, int(round(np.linalg.det(A))), jet)
    def __repr__(self):
        return f'''<SphereDiffeo name={self.name} degree={self.degree}>'''


def identity_map(N: int) -> SphereDiffeo:
    return SphereDiffeo.linear('identity', np.eye(N))


def reflection(N: int, axis: int = 0) -> SphereDiffeo:
    """rho: reflection in the hyperplane x_axis = 0."""
    A = np.eye(N)
    A[axis, axis] = -1.0
    return SphereDiffeo.linear('reflection', A)


def antipodal(N: int) -> SphereDiffeo:
    return SphereDiffeo.linear('antipodal', -np.eye(N))


def boost(N: int, beta: float) -> SphereDiffeo:
    """Conformal self-map of S^n pushing points toward e_N (a Lorentz boost on null rays).

    g(q) = (c q_s, q_N + beta) / (1 + beta q_N), c = sqrt(1 - beta^2); degree +1."""
    if not -1.0 < beta < 1.0:
        raise DomainError(f'boost parameter must lie in (-1, 1), got {beta}')
    c = math.sqrt(1.0 - beta * beta)
    C = np.eye(N) * c
    C[-1, -1] = 1.0
    eN = np.zeros(N)
    eN[-1] = 1.0
    def jet(q):
        u = q @ C.T
        u[:, -1] += beta
        w = 1.0 + beta * q[:, -1]
        G = u / w[:, None]
        DG = C[None, :, :] / w[:, None, None] - beta * np.einsum('ma,b->mab', u, eN) / w[:, None, None] ** 2
        D2G = (
            -beta * (np.einsum('ab,c->abc', C, eN) + np.einsum('ac,b->abc', C, eN))[None] / w[:, None, None, None] ** 2
            + 2.0 * beta * beta * np.einsum('ma,b,c->mabc', u, eN, eN) / w[:, None, None, None] ** 3
        )
        return G, DG, D2G
    return SphereDiffeo(f'boost({beta:g})', 1, jet)


class IntervalClass(str, enum.Enum):
    DISJOINT = 'Disjoint'
    OVERLAPS = 'Overlaps'
    CONTAINS = 'Contains'
    CONTAINED_IN = 'ContainedIn'


class CurvatureInterval:
    """The constraint interval I for principal curvatures.

    Instantiate like this:
    CurvatureInterval(-math.inf, -1.0) # (-inf, -1)
    CurvatureInterval.parse('[-2, 1)')

    Closed endpoints accept values up to `tol` beyond them; open endpoints are strict."""
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool
    def __init__(self, lo: float, hi: float, lo_closed: bool = False, hi_closed: bool = False):
        lo = float(lo)
        hi = float(hi)
        if not lo < hi:
            raise DomainError(f'empty interval: lo={lo}, hi={hi}')
        self.lo = lo
        self.hi = hi
        # Infinite endpoints are never attained
        self.lo_closed = bool(lo_closed) and math.isfinite(lo)
        self.hi_closed = bool(hi_closed) and math.isfinite(hi)
    @classmethod
    def parse(cls, text: str) -> 'CurvatureInterval':
        text = text.strip()
        if len(text) < 5 or text[0] not in '([' or text[-1] not in ')]' or ',' not in text:
            raise DomainError(f'cannot parse interval {text!r}')
        lo_text, hi_text = text[1:-1].split(',', 1)
        return cls(float(lo_text), float(hi_text), text[0] == '[', text[-1] == ']')
    def negate(self) -> 'CurvatureInterval':
        return CurvatureInterval(-self.hi, -self.lo, self.hi_closed, self.lo_closed)
    def margin(self, values) -> np.ndarray:
        """Signed distance to the complement: positive inside, negative outside."""
        values = np.asarray(values, dtype=float)
        return np.minimum(values - self.lo, self.hi - values)
    def contains(self, values, tol: float = 1e-9) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        above = values >= self.lo - tol if self.lo_closed else values > self.lo
        below = values <= self.hi + tol if self.hi_closed else values < self.hi
        return above & below
    def classify(self, kappa: float) -> IntervalClass:
        """Position against [-kappa, kappa]."""
        if self.hi < -kappa or (self.hi == -kappa and not self.hi_closed):
            return IntervalClass.DISJOINT
        if self.lo > kappa or (self.lo == kappa and not self.lo_closed):
            return IntervalClass.DISJOINT
        if self.lo >= -kappa and self.hi <= kappa:
            return IntervalClass.CONTAINED_IN
        covers_lo = self.lo < -kappa or (self.lo == -kappa and self.lo_closed)
        covers_hi = self.hi > kappa or (self.hi == kappa and self.hi_closed)
        if covers_lo and covers_hi:
            return IntervalClass.CONTAINS
        return IntervalClass.OVERLAPS
    def below(self, bound: float) -> bool:
        """I < bound: every element is smaller than bound."""
        return self.hi < bound or (self.hi == bound and not self.hi_closed)
    def above(self, bound: float) -> bool:
        """I > bound: every element is larger than bound."""
        return self.lo > bound or (self.lo == bound and not self.lo_closed)
    def as_json(self) -> str:
        return str(self)
    def __eq__(self, other):
        if not isinstance(other, CurvatureInterval): return False
        return (self.lo, self.hi, self.lo_closed, self.hi_closed) == (other.lo, other.hi, other.lo_closed, other.hi_closed)
    def __hash__(self):
        return hash((self.lo, self.hi, self.lo_closed, self.hi_closed))
    def __str__(self):
        return f'''{'[' if self.lo_closed else '('}{self.lo:g}, {self.hi:g}{']' if self.hi_closed else ')'}'''
    def __repr__(self):
        return f'''<CurvatureInterval {self}>'''


class ShapeData:
    """Extrinsic data at a batch of chart points.

    g, h, S: (m, n, n) in the chart basis; lambdas (m, n) ascending;
    directions (m, n, n) whose columns are g-orthonormal principal directions;
    normal (m, D) the unit normal nu."""
    at: ChartPoint
    g: np.ndarray
    h: np.ndarray
    S: np.ndarray
    lambdas: np.ndarray
    directions: np.ndarray
    normal: np.ndarray
    def __init__(self, at, g, h, S, lambdas, directions, normal):
        self.at = at
        self.g = g
        self.h = h
        self.S = S
        self.lambdas = lambdas
        self.directions = directions
        self.normal = normal
    def self_adjointness_defect(self) -> float:
        gS = self.g @ self.S
        return float(np.max(np.abs(gS - np.swapaxes(gS, -1, -2)), initial=0.0))
    def __repr__(self):
        return f'''<ShapeData chart={self.at.chart.value} count={len(self.at)} lambda=[{self.lambdas.min():.6g}, {self.lambdas.max():.6g}]>'''
