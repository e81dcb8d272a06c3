import typing as t


class ImmersipyError(Exception):
    """Base class for everything this package raises on purpose."""


class DomainError(ImmersipyError):
    """A point is outside its model, or two models don't agree."""


class NotAnImmersionError(ImmersipyError):
    """The differential lost rank somewhere.

    Carries the smallest singular value seen and where it was seen."""
    sigma_min: float
    location: t.Any
    def __init__(self, message: str, sigma_min: float, location: t.Any = None):
        super().__init__(f'{message} (smallest singular value {sigma_min:.3e} at {location})')
        self.sigma_min = sigma_min
        self.location = location


class CurvatureIntervalError(ImmersipyError):
    """A sampled principal curvature left the constraint interval."""
    value: float
    margin: float
    location: t.Any
    def __init__(self, message: str, value: float, margin: float, location: t.Any = None):
        super().__init__(f'{message} (lambda={value:.6g}, margin={margin:.3e}, at {location})')
        self.value = value
        self.margin = margin
        self.location = location


class DeformationError(ImmersipyError):
    """A deformation left its hypotheses, or the tau search ran out."""
    s: float | None
    value: float | None
    margin: float | None
    def __init__(self, message: str, s: float | None = None, value: float | None = None, margin: float | None = None):
        details = ', '.join(
            f'{k}={v:.6g}' for k, v in (('s', s), ('lambda', value), ('margin', margin)) if v is not None
        )
        super().__init__(f'{message} ({details})' if details else message)
        self.s = s
        self.value = value
        self.margin = margin


class DegreeUnresolvedError(ImmersipyError):
    """Quadrature sum too far from an integer to call it a degree."""
    raw: float
    residual: float
    def __init__(self, raw: float, residual: float):
        super().__init__(f'unresolved degree: raw={raw:.6f}, residual={residual:.3e}')
        self.raw = raw
        self.residual = residual


class CatalogError(ImmersipyError):
    """Unknown catalog entry, or parameters outside the entry's regime."""


class ConfigError(ImmersipyError):
    """Bad experiment config. `field` names the offending key."""
    field: str
    def __init__(self, field: str, message: str):
        super().__init__(f'{field}: {message}')
        self.field = field


class OrientationMismatchError(ImmersipyError):
    """A Gauss map's Jacobian sign disagrees with the orientation rule, or is not constant."""
