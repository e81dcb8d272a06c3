from immersipy import Chart, ChartPoint, CurvatureInterval, IntervalClass
from immersipy.datamodels import antipodal, boost, identity_map, reflection, stereographic
from immersipy.errors import DomainError
import math
import numpy as np
import pytest

# Setup

rng = np.random.default_rng(3)
x = rng.uniform(-1.5, 1.5, (40, 2))
q = rng.standard_normal((60, 3))
q = q / np.linalg.norm(q, axis=-1, keepdims=True)

# Tests

def test_stereographic_lands_on_sphere():
    for chart in Chart:
        P, _, _ = stereographic(chart, x)
        np.testing.assert_allclose(np.sum(P * P, axis=-1), 1.0, rtol=1e-13)


def test_stereographic_derivatives():
    h = 1e-6
    P, dP, d2P = stereographic('South', x)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        Pp, dPp, _ = stereographic('South', x + e)
        Pm, dPm, _ = stereographic('South', x - e)
        np.testing.assert_allclose(dP[:, :, i], (Pp - Pm) / (2 * h), atol=1e-8)
        np.testing.assert_allclose(d2P[:, :, :, i], (dPp - dPm) / (2 * h), atol=1e-7)


def test_chart_origins():
    np.testing.assert_allclose(ChartPoint('South', [0.0, 0.0]).sphere_points(), [[0.0, 0.0, 1.0]])
    np.testing.assert_allclose(ChartPoint('North', [0.0, 0.0]).sphere_points(), [[0.0, 0.0, -1.0]])


def test_chart_orientations():
    for chart, sign in ((Chart.SOUTH, 1), (Chart.NORTH, -1)):
        P, dP, _ = stereographic(chart, x)
        frame = np.concatenate([dP, P[:, :, None]], axis=2)
        assert np.all(np.sign(np.linalg.det(frame)) == sign)
        assert ChartPoint(chart, x).orientation == sign


def test_transition_keeps_sphere_points():
    p = ChartPoint('South', x)
    np.testing.assert_allclose(p.transition().sphere_points(), p.sphere_points(), atol=1e-13)
    assert p.transition().chart == Chart.NORTH
    with pytest.raises(DomainError):
        ChartPoint('South', [0.0, 0.0]).transition()


def test_cover_splits_sphere():
    batches = ChartPoint.cover(q)
    seen = np.concatenate([idx for _, idx in batches])
    assert sorted(seen.tolist()) == list(range(len(q)))
    for cp, idx in batches:
        assert np.all(np.linalg.norm(cp.x, axis=-1) <= 1.0 + 1e-12)
        np.testing.assert_allclose(cp.sphere_points(), q[idx], atol=1e-13)
        if cp.chart == Chart.SOUTH:
            assert np.all(q[idx, -1] >= 0.0)


def test_from_sphere_rejects_pole():
    with pytest.raises(DomainError):
        ChartPoint.from_sphere('South', [0.0, 0.0, -1.0])


def test_chart_point_shape():
    with pytest.raises(DomainError):
        ChartPoint('South', np.zeros((2, 2, 2)))
    assert len(ChartPoint('North', x)) == 40
    assert ChartPoint('North', x)[3].x.shape == (1, 2)


def test_interval_parse_and_str():
    I = CurvatureInterval.parse('[-2, 1)')
    assert I.lo == -2.0 and I.hi == 1.0
    assert I.lo_closed and not I.hi_closed
    assert str(I) == '[-2, 1)'
    J = CurvatureInterval.parse('(-inf, -1]')
    assert J.lo == -math.inf and not J.lo_closed and J.hi_closed
    assert CurvatureInterval.parse(str(J)) == J
    with pytest.raises(DomainError):
        CurvatureInterval.parse('-2, 1')
    with pytest.raises(DomainError):
        CurvatureInterval(1.0, 1.0)


def test_interval_infinite_endpoint_never_closed():
    assert not CurvatureInterval(-math.inf, 0.0, True, True).lo_closed


def test_interval_contains_open_and_closed():
    open_ = CurvatureInterval(-math.inf, -1.0)
    closed = CurvatureInterval(-math.inf, -1.0, hi_closed=True)
    assert not open_.contains(-1.0)
    assert open_.contains(-1.0000001)
    assert closed.contains(-1.0)
    assert closed.contains(-1.0 + 1e-10)
    assert not closed.contains(-1.0 + 1e-6)
    np.testing.assert_array_equal(open_.contains([-3.0, 0.0]), [True, False])


def test_interval_margin():
    I = CurvatureInterval(-2.0, 1.0)
    np.testing.assert_allclose(I.margin([-1.5, 0.5, 2.0]), [0.5, 0.5, -1.0])


def test_interval_negate():
    I = CurvatureInterval(-math.inf, -1.0, hi_closed=True)
    assert I.negate() == CurvatureInterval(1.0, math.inf, lo_closed=True)
    assert I.negate().negate() == I


def test_interval_classify():
    assert CurvatureInterval(-math.inf, -1.0).classify(1.0) == IntervalClass.DISJOINT
    assert CurvatureInterval(-math.inf, -1.0, hi_closed=True).classify(1.0) == IntervalClass.OVERLAPS
    assert CurvatureInterval(1.0, 5.0).classify(1.0) == IntervalClass.DISJOINT
    assert CurvatureInterval(-2.0, 1.0).classify(1.0) == IntervalClass.OVERLAPS
    assert CurvatureInterval(-0.5, 0.5).classify(1.0) == IntervalClass.CONTAINED_IN
    assert CurvatureInterval(-2.0, 2.0).classify(1.0) == IntervalClass.CONTAINS
    assert CurvatureInterval(-1.0, 1.0, True, True).classify(1.0) == IntervalClass.CONTAINED_IN


def test_interval_below_above():
    I = CurvatureInterval(-2.0, 1.0)
    assert I.below(1.0)
    assert not CurvatureInterval(-2.0, 1.0, hi_closed=True).below(1.0)
    assert I.above(-2.0)
    assert not I.above(-1.0)


def test_linear_diffeo_degrees():
    assert identity_map(3).degree == 1
    assert reflection(3).degree == -1
    assert antipodal(3).degree == -1
    assert antipodal(4).degree == 1
    np.testing.assert_allclose(reflection(3)(q)[:, 0], -q[:, 0])


def test_boost_maps_sphere_to_sphere():
    g = boost(3, 0.4)
    image = g(q)
    np.testing.assert_allclose(np.sum(image * image, axis=-1), 1.0, rtol=1e-12)
    assert g.degree == 1
    G, DG, D2G = g.jet(q)
    h = 1e-6
    e = np.zeros(3)
    e[0] = h
    Gp, DGp, _ = g.jet(q + e)
    Gm, DGm, _ = g.jet(q - e)
    np.testing.assert_allclose(DG[:, :, 0], (Gp - Gm) / (2 * h), atol=1e-7)
    np.testing.assert_allclose(D2G[:, :, :, 0], (DGp - DGm) / (2 * h), atol=1e-6)
    with pytest.raises(DomainError):
        boost(3, 1.0)
