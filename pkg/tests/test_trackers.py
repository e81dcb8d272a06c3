from immersipy import ChartPoint, CurvatureInterval, SphereMesh, euclidean_retraction, halfspace_retraction, normal_flow_path, track
from immersipy.catalog import bumpy_sphere, ellipsoid, halfspace_sphere
from immersipy.errors import DeformationError, DomainError
from immersipy.trackers import HomotopyReport, StepRecord, measure_step
import math
import pytest

# Setup

mesh = SphereMesh.icosphere(0)
below = CurvatureInterval(-math.inf, -1.0)

# Tests

def test_track_euclidean_retraction():
    path = euclidean_retraction(ellipsoid((2.0, 1.0, 1.0)), -1.0)
    report = track(path, mesh, steps=5)
    assert len(report) == 5
    assert list(report.steps.keys()) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert report.passed
    assert report.verdict == 'PASS'
    assert report.max_drift < 1e-6
    assert report.max_formula_residual < 1e-5
    assert report.first_failure is None


def test_track_halfspace_retraction_with_threads():
    path = halfspace_retraction(bumpy_sphere(0.05, model='HalfSpace'), -2.0, below)
    serial = track(path, mesh, steps=3)
    threaded = track(path, mesh, steps=3, workers=3)
    assert threaded.passed and serial.passed
    for a, b in zip(serial.records(), threaded.records()):
        assert a.s == b.s
        assert a.lambda_min == pytest.approx(b.lambda_min)


def test_track_reports_leaving_the_interval():
    # flowing -2 by r = 1 already gives about -1.095, outside (-inf, -1.5)
    path = normal_flow_path(halfspace_sphere(-2.0), 3.0, CurvatureInterval(-math.inf, -1.5))
    report = track(path, mesh, steps=4, max_refinements=0)
    assert not report.passed
    first = report.first_failure
    assert first is not None and first.s > 0.0
    assert first.inside is False
    assert first.worst_lambda > -1.5
    assert 'leaves' in first.error


def test_flow_through_a_focal_point_fails_from_the_start():
    # lambda = 2 > kappa: the curvature law is undefined and cosh r - 2 sinh r vanishes at tanh r = 1/2
    path = normal_flow_path(halfspace_sphere(2.0), 1.0)
    report = track(path, mesh, steps=5, max_refinements=0)
    assert not report.passed
    first = report.first_failure
    assert first.s == 0.0
    assert first.hypothesis is False
    assert 'lambda < kappa' in first.error
    late = report.steps[0.75]
    assert late.immersion is False
    assert 'focal point' in late.error
    assert all(not r.passed() for r in report.records())


def test_flow_path_rejects_intervals_reaching_kappa():
    with pytest.raises(DeformationError):
        normal_flow_path(halfspace_sphere(-2.0), 1.0, CurvatureInterval(-3.0, 1.0))
    with pytest.raises(DeformationError) as info:
        normal_flow_path(halfspace_sphere(2.0), 1.0).at(1.0).eval(ChartPoint('South', [[0.1, 0.2]]))
    assert info.value.margin < 0.0
    assert info.value.s == 1.0


def test_refinement_near_the_boundary():
    # lambda(r) = -coth(atanh(1/2) + r) crosses -1.5 at r = atanh(2/3) - atanh(1/2), about 0.255
    path = normal_flow_path(halfspace_sphere(-2.0), 1.0, CurvatureInterval(-math.inf, -1.5))
    report = track(path, mesh, steps=2, refine_tol=1.0, max_refinements=4)
    assert len(report) == 6
    keys = list(report.steps.keys())
    assert keys == sorted(keys)
    assert 0.5 in report.steps


def test_track_needs_two_steps():
    path = euclidean_retraction(ellipsoid(), -1.0)
    with pytest.raises(DomainError):
        track(path, mesh, steps=1)


def test_measure_step_turns_errors_into_records():
    path = euclidean_retraction(ellipsoid(), -1.0)
    record = measure_step(path, 3.0, mesh, None)
    assert not record.immersion
    assert not record.passed()
    assert record.error


def test_report_orders_records():
    report = HomotopyReport('r', 'NormalFlow', None)
    for s in (1.0, 0.0, 0.5):
        report.add(StepRecord(s, lambda_min=-1.0, lambda_max=-1.0))
    assert [r.s for r in report.records()] == [0.0, 0.5, 1.0]
    assert report.passed
    assert report.max_drift is None
    assert report.as_json()['steps'] == 3
