"""Sample meshes of the unit sphere S^n with quadrature weights."""
import logging
import math
import typing as t

import numpy as np
from scipy.spatial import ConvexHull

from .datamodels import Chart, ChartPoint, stereographic
from .errors import DomainError

logger = logging.getLogger(__name__)


def sphere_volume(n: int) -> float:
    """omega_n, the round volume of S^n."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def _icosahedron() -> np.ndarray:
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    v = []
    for a in (-1.0, 1.0):
        for b in (-phi, phi):
            v.extend([(0.0, a, b), (a, b, 0.0), (b, 0.0, a)])
    v = np.array(v)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _outward_faces(vertices: np.ndarray) -> np.ndarray:
    faces = ConvexHull(vertices).simplices.copy()
    a, b, c = (vertices[faces[:, k]] for k in range(3))
    inward = np.einsum('ij,ij->i', np.cross(b - a, c - a), a + b + c) < 0.0
    faces[inward] = faces[inward][:, [0, 2, 1]]
    return faces


def spherical_triangle_areas(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Exact areas of spherical triangles with unit-vector corners (rows)."""
    triple = np.abs(np.einsum('ij,ij->i', a, np.cross(b, c)))
    denom = 1.0 + np.einsum('ij,ij->i', a, b) + np.einsum('ij,ij->i', b, c) + np.einsum('ij,ij->i', c, a)
    return 2.0 * np.arctan2(triple, denom)


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """0 for t <= 0, 1 for t >= 1, C-infinity in between."""
    def bump(s):
        out = np.zeros_like(s)
        pos = s > 0.0
        out[pos] = np.exp(-1.0 / s[pos])
        return out
    a = bump(t)
    return a / (a + bump(1.0 - t))


def south_partition(q_last: np.ndarray) -> np.ndarray:
    """Weight of the South chart in a smooth partition of unity of S^n.

    1 on q_N >= 1/2, 0 on q_N <= -1/2; the North chart takes the rest."""
    return _smooth_step(np.asarray(q_last, dtype=float) + 0.5)


class SphereMesh:
    """Points of S^n in R^{n+1} with round-area quadrature weights.

    Instantiate like this:
    SphereMesh.icosphere(3) # n = 2 only; has faces for OBJ export
    SphereMesh.grid(3, resolution=24) # any n; per-chart grids with a partition of unity
    """
    kind: str
    level: int
    vertices: np.ndarray # (V, n+1), unit rows
    weights: np.ndarray # (V,)
    faces: np.ndarray | None # (F, 3), outward oriented, icospheres only
    def __init__(self, kind: str, level: int, vertices, weights, faces=None):
        self.kind = kind
        self.level = int(level)
        self.vertices = np.asarray(vertices, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.faces = faces
        if self.vertices.shape[0] != self.weights.shape[0]:
            raise DomainError('one weight per vertex')
    @property
    def n(self) -> int:
        return self.vertices.shape[1] - 1
    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))
    def __len__(self):
        return self.vertices.shape[0]
    @classmethod
    def icosphere(cls, level: int) -> 'SphereMesh':
        """Loop-subdivided icosahedron projected to S^2.

        A vertex gets a third of the exact spherical area of each incident
        triangle, so the weights sum to 4 pi up to rounding."""
        if level < 0:
            raise DomainError(f'icosphere level must be nonnegative, got {level}')
        vertices = _icosahedron()
        faces = _outward_faces(vertices)
        for _ in range(level):
            cache: t.Dict[t.Tuple[int, int], int] = {}
            new_vertices = list(vertices)
            def midpoint(i, j):
                key = (min(i, j), max(i, j))
                if key not in cache:
                    m = vertices[i] + vertices[j]
                    new_vertices.append(m / np.linalg.norm(m))
                    cache[key] = len(new_vertices) - 1
                return cache[key]
            new_faces = []
            for a, b, c in faces:
                ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
                new_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
            vertices = np.array(new_vertices)
            faces = np.array(new_faces)
        areas = spherical_triangle_areas(vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]])
        weights = np.zeros(len(vertices))
        for k in range(3):
            np.add.at(weights, faces[:, k], areas / 3.0)
        logger.debug('icosphere level %d: %d vertices, %d faces', level, len(vertices), len(faces))
        return cls('icosphere', level, vertices, weights, faces)
    @classmethod
    def grid(cls, n: int, resolution: int = 24, extent: float = 2.0) -> 'SphereMesh':
        """Cell-centered grids on [-extent, extent]^n in both charts.

        Weight = partition-of-unity factor * round volume element
        (2 / (1 + |x|^2))^n * cell volume. Zero-weight cells are dropped."""
        if n < 2:
            raise DomainError(f'n must be at least 2, got {n}')
        if extent ** 2 <= 3.0:
            # the South chart must reach q_N = -1/2, i.e. |x|^2 = 3
            raise DomainError('grid extent must exceed sqrt(3)')
        h = 2.0 * extent / resolution
        axis = -extent + h * (np.arange(resolution) + 0.5)
        x = np.stack(np.meshgrid(*([axis] * n), indexing='ij'), axis=-1).reshape(-1, n)
        volume_element = (2.0 / (1.0 + np.sum(x * x, axis=-1))) ** n * h ** n
        vertices = []
        weights = []
        for chart in (Chart.SOUTH, Chart.NORTH):
            q = stereographic(chart, x)[0]
            psi = south_partition(q[:, -1])
            if chart == Chart.NORTH:
                psi = 1.0 - psi
            keep = psi > 0.0
            vertices.append(q[keep])
            weights.append(psi[keep] * volume_element[keep])
        return cls('grid', resolution, np.concatenate(vertices), np.concatenate(weights))
    @classmethod
    def for_dimension(cls, n: int, level: int) -> 'SphereMesh':
        """An icosphere when n = 2, otherwise a grid whose resolution grows with level."""
        if n == 2:
            return cls.icosphere(level)
        return cls.grid(n, resolution=6 * 2 ** max(level - 1, 0))
    def chart_batches(self) -> t.List[t.Tuple[ChartPoint, np.ndarray]]:
        return ChartPoint.cover(self.vertices)
    def integrate(self, values) -> float:
        """Quadrature of per-vertex values against round volume."""
        return float(np.sum(self.weights * np.asarray(values, dtype=float)))
    def __repr__(self):
        return f'''<SphereMesh kind={self.kind} level={self.level} n={self.n} vertices={len(self)}>'''
