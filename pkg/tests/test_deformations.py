from immersipy import CurvatureInterval, SphereMesh, euclidean_retraction, halfspace_retraction, normal_flow, overlap_path, track
from immersipy.catalog import ball_sphere, bumpy_sphere, ellipsoid, halfspace_sphere, inclusion
from immersipy.deformations import R_MAX, curvature_flow_value, flow_radius, normal_flow_path, overlap_taus, switch_side
from immersipy.errors import DeformationError, DomainError
from immersipy.immersions import shape_field, shape_on_sphere
import math
import numpy as np
import pytest

# Setup

mesh = SphereMesh.icosphere(1)
q = mesh.vertices
below = CurvatureInterval(-math.inf, -1.0)

# Tests

def test_curvature_flow_branches():
    ell = 0.7
    for r in (0.1, 1.0, 4.0):
        assert curvature_flow_value(-1.0 / math.tanh(ell), r) == pytest.approx(-1.0 / math.tanh(ell + r))
        assert curvature_flow_value(-1.0, r) == pytest.approx(-1.0)
        assert curvature_flow_value(math.tanh(ell), r) == pytest.approx(math.tanh(ell - r))


def test_curvature_flow_scales_with_kappa():
    lam = np.array([-3.0, -2.0, 0.5])
    np.testing.assert_allclose(curvature_flow_value(lam, 0.4, kappa=2.0), 2.0 * curvature_flow_value(lam / 2.0, 0.8))
    with pytest.raises(DomainError):
        curvature_flow_value(1.0, 0.5)


def test_curvature_flow_is_monotone_in_r():
    radii = np.linspace(0.0, 3.0, 31)
    values = {lam: np.array([curvature_flow_value(lam, r) for r in radii]) for lam in (-3.0, -1.0, 0.0, 0.9)}
    assert np.all(np.diff(values[-3.0]) >= 0.0)
    np.testing.assert_allclose(values[-1.0], -1.0)
    assert np.all(np.diff(values[0.0]) <= 0.0)
    assert np.all(np.diff(values[0.9]) <= 0.0)
    # all of them approach -1
    for lam, curve in values.items():
        assert abs(curve[-1] + 1.0) <= abs(lam + 1.0)


def test_normal_flow_of_round_sphere():
    f = halfspace_sphere(-2.0)
    ell = math.atanh(0.5) # -coth(ell) = -2
    for r in (0.5, 2.0):
        lam = shape_field(normal_flow(f, r), mesh).lambdas
        np.testing.assert_allclose(lam, -1.0 / math.tanh(ell + r), atol=1e-5)


def test_normal_flow_follows_curvature_law_on_bumpy_sphere():
    f = bumpy_sphere(0.05, model='HalfSpace')
    base = shape_field(f, mesh).lambdas
    lam = shape_field(normal_flow(f, 1.0, mesh), mesh).lambdas
    np.testing.assert_allclose(lam, curvature_flow_value(base, 1.0), atol=1e-5)


def test_normal_flow_arguments():
    f = halfspace_sphere(-2.0)
    assert normal_flow(f, 0.0) is f
    with pytest.raises(DomainError):
        normal_flow(f, -1.0)
    with pytest.raises(DomainError):
        normal_flow(inclusion(), 1.0)


def test_normal_flow_stops_being_an_immersion():
    # lambda = 2 > kappa: the immersion factor cosh r - 2 sinh r vanishes at tanh r = 1/2
    with pytest.raises(DeformationError):
        normal_flow(halfspace_sphere(2.0), 1.0, mesh)
    with pytest.raises(DeformationError, match='focal point'):
        normal_flow(halfspace_sphere(2.0), 1.0)
    # still an immersion before tanh r = 1/2
    lam = shape_field(normal_flow(halfspace_sphere(2.0), 0.2), mesh).lambdas
    T = math.tanh(0.2)
    np.testing.assert_allclose(lam, (2.0 - T) / (1.0 - 2.0 * T), atol=1e-5)


def test_normal_flow_across_minus_one():
    # a nearly horospherical bumpy sphere has curvatures on both sides of -1
    f = bumpy_sphere(0.18, model='Ball', mu0=-1.02)
    base = shape_field(f, mesh).lambdas
    assert base.max() > -1.0
    assert base.min() < -1.0
    for r in (0.5, 1.0):
        lam = shape_field(normal_flow(f, r, mesh), mesh).lambdas
        np.testing.assert_allclose(lam, curvature_flow_value(base, r), atol=1e-5)
        assert np.all(np.abs(lam + 1.0) <= np.abs(base + 1.0) + 2e-5)
        clear = np.abs(base + 1.0) > 1e-3
        assert np.all(np.sign(lam[clear] + 1.0) == np.sign(base[clear] + 1.0))


def test_switch_side():
    f = ellipsoid((2.0, 1.0, 0.7))
    g, flipped = switch_side(f, CurvatureInterval(-math.inf, 0.0))
    assert flipped == CurvatureInterval(0.0, math.inf)
    mirrored = q * np.array([-1.0, 1.0, 1.0])
    expected = np.sort(-shape_on_sphere(f, mirrored)[0], axis=-1)
    np.testing.assert_allclose(shape_field(g, mesh).lambdas, expected, atol=1e-10)


def test_euclidean_retraction_spectrum():
    f = ellipsoid((2.0, 1.0, 0.7))
    path = euclidean_retraction(f, -1.0)
    assert path.at(0.0) is f
    for s in (0.3, 0.8):
        measured = shape_field(path.at(s), mesh).lambdas
        np.testing.assert_allclose(measured, path.predicted_curvatures(s, q), atol=1e-5)
    np.testing.assert_allclose(shape_field(path.at(1.0), mesh).lambdas, -1.0, atol=1e-5)


def test_euclidean_retraction_positive_side():
    g, _ = switch_side(ellipsoid((2.0, 1.0, 0.7)))
    path = euclidean_retraction(g, 1.5)
    np.testing.assert_allclose(shape_field(path.at(1.0), mesh).lambdas, 1.5, atol=1e-5)
    np.testing.assert_allclose(shape_field(path.at(0.5), mesh).lambdas, path.predicted_curvatures(0.5, q), atol=1e-5)


def test_euclidean_retraction_rejects_bad_targets():
    with pytest.raises(DeformationError):
        euclidean_retraction(inclusion(), -1.0, CurvatureInterval(-2.0, 1.0))
    with pytest.raises(DeformationError):
        euclidean_retraction(inclusion(), -3.0, CurvatureInterval(-2.0, 0.0))
    with pytest.raises(DomainError):
        euclidean_retraction(halfspace_sphere(), -2.0)


def test_halfspace_retraction_spectrum():
    f = bumpy_sphere(0.05, model='HalfSpace')
    path = halfspace_retraction(f, -2.0, below)
    measured = shape_field(path.at(0.5), mesh).lambdas
    np.testing.assert_allclose(measured, path.predicted_curvatures(0.5, q), atol=1e-5)
    np.testing.assert_allclose(shape_field(path.at(1.0), mesh).lambdas, -2.0, atol=1e-5)
    with pytest.raises(DomainError):
        halfspace_retraction(ball_sphere(), -2.0)
    with pytest.raises(DomainError):
        path.at(1.5)


def test_halfspace_retraction_above_kappa():
    path = halfspace_retraction(halfspace_sphere(3.0), 2.0, CurvatureInterval(1.0, math.inf))
    np.testing.assert_allclose(shape_field(path.at(0.5), mesh).lambdas, path.predicted_curvatures(0.5, q), atol=1e-5)


def test_normal_flow_path_prediction():
    path = normal_flow_path(halfspace_sphere(-3.0), 2.0)
    np.testing.assert_allclose(shape_field(path.at(0.5), mesh).lambdas, path.predicted_curvatures(0.5, q), atol=1e-5)


def test_overlap_taus():
    taus = overlap_taus(3)
    assert taus == [0.5, 0.75, 0.875, 0.9375]
    assert flow_radius(0.0) == 0.0
    assert flow_radius(1.0) == pytest.approx(R_MAX)


def test_overlap_path_endpoints():
    f = bumpy_sphere(0.05, model='Ball')
    path = overlap_path(f, -1.5, 0.75, CurvatureInterval(-2.0, 1.0))
    assert path.s_max == 2.0
    assert path.at(0.0) is f
    np.testing.assert_allclose(shape_field(path.at(2.0), mesh).lambdas, -1.5, atol=1e-4)


def test_overlap_path_keeps_no_gauss_map():
    # the homotheties move the visual Gauss map, so no drift is measured
    path = overlap_path(bumpy_sphere(0.05, model='Ball'), -1.5, 0.75, CurvatureInterval(-2.0, 1.0))
    assert path.gauss is None
    report = track(path, mesh, steps=3, max_refinements=0)
    assert all(record.drift is None for record in report.steps.values())


def test_overlap_path_arguments():
    f = ball_sphere(-2.0)
    with pytest.raises(DomainError):
        overlap_path(halfspace_sphere(), -2.0, 0.75)
    with pytest.raises(DomainError):
        overlap_path(f, -2.0, 0.25)
    with pytest.raises(DomainError):
        overlap_path(f, -0.5, 0.75)
    with pytest.raises(DeformationError):
        overlap_path(f, -2.0, 0.75, below)
    with pytest.raises(DeformationError):
        overlap_path(f, -2.0, 0.75, CurvatureInterval(-1.5, 1.0))
