"""Experiment configuration, read from a single JSON file.

Example:

    {
      "operation": "deform",
      "immersion": "bumpy_halfspace_sphere",
      "interval": "(-inf, -1)",
      "mesh_level": 3,
      "deformation": {"kind": "HalfSpaceRetraction", "mu": -2.0, "steps": 33}
    }
"""
import json
import pathlib
import typing as t

from rapidfuzz import process

from .datamodels import CurvatureInterval
from .errors import ConfigError, DomainError
from .spaceforms import ModelKind, SpaceFormModel

OPERATIONS = ('curvature', 'gauss', 'degree', 'deform', 'verify-all')
GAUSS_CHOICES = ('designated', 'Euclidean', 'Flat', 'Visual', 'Check')
DEFORMATION_KINDS = ('EuclideanRetraction', 'HalfSpaceRetraction', 'NormalFlow', 'OverlapPath')


def _reject_unknown(data: dict, known: t.Iterable[str], prefix: str = '') -> None:
    known = list(known)
    for key in data:
        if key not in known:
            match = process.extractOne(key, known)
            hint = f'; did you mean {match[0]!r}?' if match is not None else ''
            raise ConfigError(f'{prefix}{key}', f'unknown field{hint}')


def _typed(data: dict, key: str, kind, default, prefix: str = ''):
    if key not in data or data[key] is None:
        return default
    value = data[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind in (int, float) and isinstance(value, bool)):
        raise ConfigError(f'{prefix}{key}', f'expected {kind.__name__}, got {value!r}')
    return value


def _choice(value, choices: t.Sequence[str], field: str) -> str:
    if value not in choices:
        match = process.extractOne(str(value), list(choices))
        hint = f'; did you mean {match[0]!r}?' if match is not None else ''
        raise ConfigError(field, f'must be one of {list(choices)}, got {value!r}{hint}')
    return value


class DeformationConfig:
    """kind, mu, steps and the tau policy ("search" or a number in [1/2, 1))."""
    kind: str
    mu: float | None
    steps: int
    tau: str | float
    r_end: float | None # NormalFlow only
    max_refinements: int
    FIELDS = ('kind', 'mu', 'steps', 'tau', 'r_end', 'max_refinements')
    def __init__(self, kind: str, mu: float | None = None, steps: int = 33, tau: str | float = 'search', r_end: float | None = None, max_refinements: int = 16):
        self.kind = _choice(kind, DEFORMATION_KINDS, 'deformation.kind')
        self.mu = mu
        if steps < 2:
            raise ConfigError('deformation.steps', f'needs at least 2 steps, got {steps}')
        self.steps = steps
        if tau != 'search' and not (isinstance(tau, float) and 0.5 <= tau < 1.0):
            raise ConfigError('deformation.tau', f'must be "search" or a number in [0.5, 1), got {tau!r}')
        self.tau = tau
        if self.kind == 'NormalFlow' and r_end is None:
            raise ConfigError('deformation.r_end', 'NormalFlow needs r_end')
        if self.kind != 'NormalFlow' and mu is None:
            raise ConfigError('deformation.mu', f'{self.kind} needs mu')
        self.r_end = r_end
        self.max_refinements = max_refinements
    @classmethod
    def from_json(cls, data: dict) -> 'DeformationConfig':
        if not isinstance(data, dict):
            raise ConfigError('deformation', f'expected an object, got {data!r}')
        _reject_unknown(data, cls.FIELDS, 'deformation.')
        if 'kind' not in data:
            raise ConfigError('deformation.kind', 'missing')
        tau = data.get('tau', 'search')
        if isinstance(tau, int) and not isinstance(tau, bool):
            tau = float(tau)
        return cls(
            data['kind'],
            mu=_typed(data, 'mu', float, None, 'deformation.'),
            steps=_typed(data, 'steps', int, 33, 'deformation.'),
            tau=tau,
            r_end=_typed(data, 'r_end', float, None, 'deformation.'),
            max_refinements=_typed(data, 'max_refinements', int, 16, 'deformation.'),
        )
    def as_json(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


class ExperimentConfig:
    """Everything one run needs. Command-line flags override fields through `override`."""
    operation: str
    immersion: str # catalog entry or constructor name
    params: dict # constructor parameter overrides
    model: dict | None # {"kind": ..., "kappa": ...}: view the immersion in this model
    interval: CurvatureInterval | None
    mesh_level: int
    gauss: str
    deformation: DeformationConfig | None
    out: str
    seed: int
    threads: int
    verbose: bool
    FIELDS = ('operation', 'immersion', 'params', 'model', 'interval', 'mesh_level', 'gauss', 'deformation', 'out', 'seed', 'threads', 'verbose')
    def __init__(
        self,
        operation: str,
        immersion: str = 'inclusion',
        params: dict | None = None,
        model: dict | None = None,
        interval: CurvatureInterval | None = None,
        mesh_level: int = 3,
        gauss: str = 'designated',
        deformation: DeformationConfig | None = None,
        out: str = 'out',
        seed: int = 0,
        threads: int = 1,
        verbose: bool = False,
    ):
        self.operation = _choice(operation, OPERATIONS, 'operation')
        self.immersion = immersion
        self.params = dict(params or {})
        self.model = model
        self.interval = interval
        self.mesh_level = mesh_level
        self.gauss = _choice(gauss, GAUSS_CHOICES, 'gauss')
        self.deformation = deformation
        self.out = out
        self.seed = seed
        self.threads = threads
        self.verbose = verbose
        self.validate()
    def validate(self) -> None:
        if not 0 <= self.mesh_level <= 6:
            raise ConfigError('mesh_level', f'must lie in [0, 6], got {self.mesh_level}')
        if self.threads < 1:
            raise ConfigError('threads', f'must be positive, got {self.threads}')
        if self.operation == 'deform' and self.deformation is None:
            raise ConfigError('deformation', 'the deform operation needs a deformation block')
        if self.model is not None:
            _reject_unknown(self.model, ('kind', 'kappa'), 'model.')
            try:
                ModelKind(self.model.get('kind'))
            except ValueError:
                raise ConfigError('model.kind', f'unknown model {self.model.get("kind")!r}')
    def target_model(self, ambient_dim: int) -> SpaceFormModel | None:
        if self.model is None:
            return None
        kind = ModelKind(self.model['kind'])
        kappa = self.model.get('kappa', 0.0 if kind == ModelKind.EUCLIDEAN else 1.0)
        try:
            return SpaceFormModel(kind, ambient_dim, kappa)
        except DomainError as e:
            raise ConfigError('model', str(e)) from e
    def override(self, **flags) -> 'ExperimentConfig':
        """Applies command-line flags that are not None."""
        for key, value in flags.items():
            if value is None:
                continue
            if key not in self.FIELDS:
                raise ConfigError(key, 'not a config field')
            setattr(self, key, value)
        self.validate()
        return self
    @classmethod
    def from_json(cls, data: dict) -> 'ExperimentConfig':
        if not isinstance(data, dict):
            raise ConfigError('<root>', 'the config must be a JSON object')
        _reject_unknown(data, cls.FIELDS)
        if 'operation' not in data:
            raise ConfigError('operation', 'missing')
        interval = None
        if data.get('interval') is not None:
            try:
                interval = CurvatureInterval.parse(str(data['interval']))
            except (DomainError, ValueError) as e:
                raise ConfigError('interval', str(e)) from e
        deformation = None
        if data.get('deformation') is not None:
            deformation = DeformationConfig.from_json(data['deformation'])
        model = data.get('model')
        if model is not None and not isinstance(model, dict):
            raise ConfigError('model', f'expected an object, got {model!r}')
        return cls(
            data['operation'],
            immersion=_typed(data, 'immersion', str, 'inclusion'),
            params=_typed(data, 'params', dict, {}),
            model=model,
            interval=interval,
            mesh_level=_typed(data, 'mesh_level', int, 3),
            gauss=_typed(data, 'gauss', str, 'designated'),
            deformation=deformation,
            out=_typed(data, 'out', str, 'out'),
            seed=_typed(data, 'seed', int, 0),
            threads=_typed(data, 'threads', int, 1),
            verbose=_typed(data, 'verbose', bool, False),
        )
    @classmethod
    def load(cls, path: str | pathlib.Path) -> 'ExperimentConfig':
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as e:
            raise ConfigError('<file>', str(e)) from e
        except json.JSONDecodeError as e:
            raise ConfigError('<json>', f'line {e.lineno}: {e.msg}') from e
        return cls.from_json(data)
    def as_json(self) -> dict:
        return {
            'operation': self.operation, 'immersion': self.immersion, 'params': self.params,
            'model': self.model, 'interval': None if self.interval is None else str(self.interval),
            'mesh_level': self.mesh_level, 'gauss': self.gauss,
            'deformation': None if self.deformation is None else self.deformation.as_json(),
            'out': self.out, 'seed': self.seed, 'threads': self.threads, 'verbose': self.verbose,
        }
    def __repr__(self):
        return f'''<ExperimentConfig operation={self.operation} immersion={self.immersion}>'''
