from .spaceforms import ModelKind, SpaceFormModel, BoundaryPoint, convert, push_vector, exp_map, ideal_endpoint, distance
from .datamodels import Chart, ChartPoint, Jet2Sample, Immersion, SphereDiffeo, CurvatureInterval, IntervalClass, ShapeData
from .immersions import jet, unit_normal, shape_data, shape_field, curvature_range, compose_with_diffeo, in_model
from .meshes import SphereMesh
from .gaussmaps import GaussKind, SphereMap, jacobian_field, degree, orientation_class, designated_gauss
from .deformations import PathKind, DeformationPath, round_sphere, normal_flow, euclidean_retraction, halfspace_retraction, normal_flow_path, overlap_path, search_overlap_tau
from .trackers import HomotopyReport, StepRecord, track
from .catalog import Catalog, CatalogEntry, load_catalog, make
from .config import ExperimentConfig
from .errors import (
    ImmersipyError, DomainError, NotAnImmersionError, CurvatureIntervalError, DeformationError,
    DegreeUnresolvedError, CatalogError, ConfigError, OrientationMismatchError,
)
