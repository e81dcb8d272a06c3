"""Tracking invariants along a DeformationPath."""
import logging
import math
import typing as t
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sortedcontainers import SortedDict, SortedList

from .datamodels import CurvatureInterval
from .errors import DomainError, ImmersipyError
from .gaussmaps import SphereMap
from .immersions import INTERVAL_TOL, shape_field
from .meshes import SphereMesh

if t.TYPE_CHECKING:
    from .deformations import DeformationPath

logger = logging.getLogger(__name__)

DRIFT_TOL = 1e-6
REFINE_TOL = 1e-3 # steps with interval margin below 10 * REFINE_TOL get bisected around


class StepRecord:
    """What happened to f_s at one value of s."""
    s: float
    immersion: bool
    lambda_min: float
    lambda_max: float
    sigma_min: float # smallest singular value of df over the mesh, model metric
    margin: float | None # signed distance of the sampled curvatures to the complement of I
    inside: bool | None
    drift: float | None # max angle between the designated Gauss map at s and at 0
    formula_residual: float | None
    hypothesis: bool # False when the path's closed-form law is undefined here (its standing hypothesis fails)
    error: str | None
    worst: float | None = None
    def __init__(self, s, *, immersion=True, lambda_min=math.nan, lambda_max=math.nan, sigma_min=math.nan, margin=None, inside=None, drift=None, formula_residual=None, hypothesis=True, error=None):
        self.s = s
        self.immersion = immersion
        self.lambda_min = lambda_min
        self.lambda_max = lambda_max
        self.sigma_min = sigma_min
        self.margin = margin
        self.inside = inside
        self.drift = drift
        self.formula_residual = formula_residual
        self.hypothesis = hypothesis
        self.error = error
    def passed(self, drift_tol: float = DRIFT_TOL) -> bool:
        if not self.immersion or not self.hypothesis or self.inside is False:
            return False
        return self.drift is None or self.drift <= drift_tol
    @property
    def worst_lambda(self) -> float:
        """The sample closest to leaving I (lambda_min without an interval)."""
        return self.lambda_min if self.worst is None else self.worst
    def as_json(self) -> dict:
        return {
            's': self.s, 'immersion': self.immersion,
            'lambda_min': self.lambda_min, 'lambda_max': self.lambda_max,
            'sigma_min': self.sigma_min, 'margin': self.margin, 'inside': self.inside,
            'drift': self.drift, 'formula_residual': self.formula_residual,
            'hypothesis': self.hypothesis, 'error': self.error,
        }
    def __repr__(self):
        return f'''<StepRecord s={self.s:.6g} lambda=[{self.lambda_min:.6g}, {self.lambda_max:.6g}] inside={self.inside}>'''


class HomotopyReport:
    """Per-step records of a tracked path, kept ordered by s."""
    name: str
    kind: str
    interval: CurvatureInterval | None
    drift_tol: float
    steps: SortedDict # s -> StepRecord
    params: dict
    def __init__(self, name: str, kind: str, interval: CurvatureInterval | None, drift_tol: float = DRIFT_TOL, params: dict | None = None):
        self.name = name
        self.kind = kind
        self.interval = interval
        self.drift_tol = drift_tol
        self.steps = SortedDict()
        self.params = dict(params or {})
    def add(self, record: StepRecord) -> None:
        self.steps[record.s] = record
    def records(self) -> t.List[StepRecord]:
        return list(self.steps.values())
    @property
    def passed(self) -> bool:
        return all(r.passed(self.drift_tol) for r in self.steps.values())
    @property
    def verdict(self) -> str:
        return 'PASS' if self.passed else 'FAIL'
    @property
    def first_failure(self) -> StepRecord | None:
        for record in self.steps.values():
            if not record.passed(self.drift_tol):
                return record
        return None
    @property
    def max_drift(self) -> float | None:
        drifts = [r.drift for r in self.steps.values() if r.drift is not None]
        return max(drifts) if drifts else None
    @property
    def max_formula_residual(self) -> float | None:
        residuals = [r.formula_residual for r in self.steps.values() if r.formula_residual is not None]
        return max(residuals) if residuals else None
    @property
    def min_margin(self) -> float | None:
        margins = [r.margin for r in self.steps.values() if r.margin is not None]
        return min(margins) if margins else None
    def as_json(self) -> dict:
        first = self.first_failure
        return {
            'name': self.name, 'kind': self.kind,
            'interval': None if self.interval is None else str(self.interval),
            'steps': len(self.steps), 'verdict': self.verdict,
            'first_failure': None if first is None else first.s,
            'min_margin': self.min_margin, 'max_drift': self.max_drift,
            'max_formula_residual': self.max_formula_residual,
            'params': self.params,
        }
    def __len__(self):
        return len(self.steps)
    def __repr__(self):
        return f'''<HomotopyReport {self.name} steps={len(self.steps)} verdict={self.verdict}>'''


def _angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # atan2 keeps precision for tiny angles where arccos does not
    cross = np.linalg.norm(a[:, :, None] * b[:, None, :] - a[:, None, :] * b[:, :, None], axis=(1, 2)) / math.sqrt(2.0)
    return np.arctan2(cross, np.sum(a * b, axis=-1))


def measure_step(path: 'DeformationPath', s: float, mesh: SphereMesh, interval: CurvatureInterval | None, reference: np.ndarray | None = None) -> StepRecord:
    """Evaluates f_s on the mesh. Geometric failures become records, never exceptions."""
    try:
        f_s = path.at(s)
        field = shape_field(f_s, mesh)
    except ImmersipyError as e:
        return StepRecord(s, immersion=False, inside=False, error=str(e))
    lam = field.lambdas
    record = StepRecord(
        s,
        lambda_min=float(np.min(lam)), lambda_max=float(np.max(lam)),
        sigma_min=float(np.min(field.sigma_min)),
    )
    if interval is not None:
        margins = interval.margin(lam)
        record.margin = float(np.min(margins))
        record.inside = bool(np.all(interval.contains(lam, INTERVAL_TOL)))
        if record.margin < 0.0 or not record.inside:
            worst = np.unravel_index(int(np.argmin(margins)), margins.shape)
            record.worst = float(lam[worst])
            record.error = f'lambda={lam[worst]:.9g} leaves {interval} at vertex {worst[0]}'
    if reference is not None and path.gauss is not None:
        try:
            images = SphereMap.gauss(f_s, path.gauss).sample(mesh)
            record.drift = float(np.max(_angles(images, reference)))
        except ImmersipyError as e:
            record.drift = math.inf
            record.error = str(e)
    if path.has_formula:
        try:
            predicted = path.predicted_curvatures(s, mesh.vertices)
            record.formula_residual = float(np.max(np.abs(lam - predicted)))
        except ImmersipyError as e:
            record.hypothesis = False
            record.error = str(e) if record.error is None else f'{record.error}; {e}'
    return record


def track(
    path: 'DeformationPath',
    mesh: SphereMesh,
    steps: int = 33,
    interval: CurvatureInterval | None = None,
    *,
    drift_tol: float = DRIFT_TOL,
    refine_tol: float = REFINE_TOL,
    max_refinements: int = 16,
    workers: int = 1,
    verbose: bool = False,
) -> HomotopyReport:
    """Uniform s-grid over the path, then bisection around near-violations.

    Parameters
    ----------
    steps: int
        Number of uniform s-values, endpoints included (at least 2).
    interval: CurvatureInterval
        Defaults to the path's own interval.
    refine_tol: float
        Consecutive steps either of which has margin below 10 * refine_tol
        get a midpoint, nearest-to-violation first, up to max_refinements.
    workers: int
        Threads evaluating grid steps concurrently.
    """
    if steps < 2:
        raise DomainError(f'steps must be at least 2, got {steps}')
    interval = path.interval if interval is None else interval
    report = HomotopyReport(
        f'{path.kind.value}({path.source.name})', path.kind.value, interval, drift_tol,
        params={k: v for k, v in path.params.items() if isinstance(v, (int, float, str, bool))},
    )
    reference = None
    if path.gauss is not None:
        reference = SphereMap.gauss(path.source, path.gauss).sample(mesh)
    grid = list(np.linspace(0.0, path.s_max, steps))
    def run(s):
        return measure_step(path, float(s), mesh, interval, reference)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, record in enumerate(pool.map(run, grid)):
                if verbose:
                    print(f'''Tracking:{i + 1}/{len(grid)}:s={record.s:.6f}''')
                report.add(record)
    else:
        for i, s in enumerate(grid):
            if verbose:
                print(f'''Tracking:{i + 1}/{len(grid)}:s={s:.6f}''')
            report.add(run(s))
    # Bisection queue ordered by the smaller margin of each bracket
    near = 10.0 * refine_tol
    queue = SortedList(key=lambda item: item[0])
    def enqueue(a, b):
        ma, mb = report.steps[a].margin, report.steps[b].margin
        if ma is None or mb is None:
            return
        worst = min(ma, mb)
        if worst < near:
            queue.add((worst, a, b))
    keys = list(report.steps.keys())
    for a, b in zip(keys, keys[1:]):
        enqueue(a, b)
    refinements = 0
    while queue and refinements < max_refinements:
        _, a, b = queue.pop(0)
        mid = 0.5 * (a + b)
        if mid in report.steps:
            continue
        if verbose:
            print(f'''Refining:{refinements + 1}/{max_refinements}:s={mid:.6f}''')
        report.add(run(mid))
        refinements += 1
        enqueue(a, mid)
        enqueue(mid, b)
    logger.info('tracked %s: %d steps (%d refinements), %s', report.name, len(report), refinements, report.verdict)
    return report
