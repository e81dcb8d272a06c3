from immersipy import ChartPoint, CurvatureInterval, SphereMesh, compose_with_diffeo, designated_gauss, degree, jacobian_field, orientation_class
from immersipy.catalog import ball_ellipsoid, ball_sphere, ellipsoid, halfspace_sphere, inclusion, minus_inclusion, reflected
from immersipy.datamodels import antipodal, identity_map, reflection
from immersipy.errors import DegreeUnresolvedError, DomainError
from immersipy.gaussmaps import (
    GaussKind, JacobianField, OrientationClass, SphereMap, certify_single_signed, collision_scan,
    flat_gauss, flat_gauss_derivative_residual, predicted_orientation,
)
from immersipy.immersions import shape_data
import math
import numpy as np
import pytest

# Setup

mesh = SphereMesh.icosphere(2)
below = CurvatureInterval(-math.inf, -1.0)
above = CurvatureInterval(1.0, math.inf)

# Tests

@pytest.mark.parametrize('f', [inclusion(), reflected(), minus_inclusion(), ellipsoid((2.0, 1.0, 0.7))])
def test_euclidean_gauss_degree_is_one(f):
    report = degree(designated_gauss(f), mesh)
    assert report.rounded == 1
    assert report.residual < 0.1


def test_inclusion_gauss_map_is_identity():
    field = jacobian_field(SphereMap.gauss(inclusion(), GaussKind.EUCLIDEAN), mesh)
    np.testing.assert_allclose(field.images, mesh.vertices, atol=1e-12)
    np.testing.assert_allclose(field.dets, 1.0, atol=1e-6)
    assert field.sign == 1
    assert field.verdict == 'PASS'


def test_diffeo_degrees():
    assert degree(SphereMap.from_diffeo(identity_map(3), 2), mesh).rounded == 1
    assert degree(SphereMap.from_diffeo(reflection(3), 2), mesh).rounded == -1
    assert degree(SphereMap.from_diffeo(antipodal(3), 2), mesh).rounded == -1


@pytest.mark.parametrize('g', [identity_map(3), reflection(3), antipodal(3)])
def test_degree_of_a_composition(g):
    # deg nu_(f o g) = deg(g)^n deg nu_f, here n = 2
    f = ellipsoid((2.0, 1.0, 0.7))
    expected = g.degree ** 2 * degree(designated_gauss(f), mesh).rounded
    report = degree(designated_gauss(compose_with_diffeo(f, g)), mesh)
    assert report.rounded == expected
    assert report.residual < 0.1


def test_hyperbolic_designated_gauss_degree():
    for f in (halfspace_sphere(-2.0), ball_sphere(-3.0), halfspace_sphere(2.0)):
        assert degree(designated_gauss(f), mesh).rounded == 1


def test_unresolved_degree():
    V = len(mesh)
    field = JacobianField('half', mesh, mesh.vertices, np.zeros((V, 2, 2)), np.full(V, 0.5))
    with pytest.raises(DegreeUnresolvedError) as info:
        degree(SphereMap('half', 2, lambda q: q), mesh, field=field)
    assert info.value.raw == pytest.approx(0.5)
    report = degree(SphereMap('half', 2, lambda q: q), mesh, field=field, strict=False)
    assert report.residual == pytest.approx(0.5)


def test_flat_gauss_has_unit_euclidean_length():
    f = halfspace_sphere(-2.0)
    p = ChartPoint('South', [[0.3, -0.1], [0.7, 0.4]])
    np.testing.assert_allclose(np.linalg.norm(flat_gauss(f, p), axis=-1), 1.0, rtol=1e-10)
    with pytest.raises(DomainError):
        flat_gauss(ball_sphere(-2.0), p)


def test_flat_gauss_derivative_identity():
    f = halfspace_sphere(-1.5)
    p = ChartPoint('North', [[0.2, 0.1], [-0.5, 0.6], [0.0, -0.9]])
    sd = shape_data(f, p)
    for k in range(2):
        residual = flat_gauss_derivative_residual(f, p, sd.directions[:, :, k], sd.lambdas[:, k])
        assert np.max(residual) < 1e-5


def test_visual_and_check_maps_of_centered_ball_sphere():
    f = ball_sphere(-2.0)
    q = mesh.vertices[:20]
    np.testing.assert_allclose(SphereMap.gauss(f, GaussKind.VISUAL)(q), q, atol=1e-10)
    np.testing.assert_allclose(SphereMap.gauss(f, GaussKind.CHECK)(q), -q, atol=1e-10)


def test_predicted_orientation():
    assert predicted_orientation(1.0, 3, above) == OrientationClass.REVERSING
    assert predicted_orientation(1.0, 3, below) == OrientationClass.PRESERVING
    assert predicted_orientation(1.0, 2, above) == OrientationClass.PRESERVING
    assert predicted_orientation(0.0, 3, CurvatureInterval(0.0, math.inf)) == OrientationClass.REVERSING


def test_orientation_class_checks_numerically_at_n_2():
    verdict = orientation_class(halfspace_sphere(-2.0), below, mesh)
    assert verdict.predicted == OrientationClass.PRESERVING
    assert verdict.observed == OrientationClass.PRESERVING
    verdict = orientation_class(halfspace_sphere(2.0), above, mesh)
    assert verdict.observed == OrientationClass.PRESERVING
    verdict = orientation_class(minus_inclusion(), CurvatureInterval(0.0, math.inf), mesh)
    assert verdict.observed == OrientationClass.PRESERVING


def test_orientation_class_without_mesh():
    verdict = orientation_class(inclusion(3), CurvatureInterval(0.0, math.inf))
    assert verdict.predicted == OrientationClass.REVERSING
    assert verdict.observed is None


def test_orientation_class_needs_disjoint_interval():
    with pytest.raises(DomainError):
        orientation_class(halfspace_sphere(-2.0), CurvatureInterval(-3.0, 0.5))
    with pytest.raises(DomainError):
        orientation_class(inclusion(), CurvatureInterval(-1.0, 1.0))


def test_single_signed_certificate():
    assert certify_single_signed(halfspace_sphere(-2.0), mesh).side == -1
    assert certify_single_signed(halfspace_sphere(2.0), mesh).side == 1
    assert certify_single_signed(inclusion(), mesh).verdict == 'PASS'
    mixed = certify_single_signed(ball_ellipsoid(), mesh)
    assert mixed.side == 0
    assert mixed.lo < -1.0 < mixed.hi


def test_collision_scan():
    clean = collision_scan(mesh.vertices, mesh)
    assert clean.min_distance >= 0.5 - 1e-12
    folded = mesh.vertices.copy()
    folded[:, 2] = np.abs(folded[:, 2])
    scan = collision_scan(folded, mesh)
    assert scan.min_distance < 1e-12
    assert scan.pair is not None
