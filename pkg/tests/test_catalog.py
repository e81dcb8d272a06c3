from immersipy import Catalog, CatalogEntry, ChartPoint, SphereMesh, jet, load_catalog, make
from immersipy.catalog import (
    MANIFEST_PATH, ball_ellipsoid, bumpy_sphere, ellipsoid, ellipsoid_range, halfspace_graph_sphere, halfspace_sphere,
)
from immersipy.errors import CatalogError
from immersipy.immersions import shape_on_sphere
from immersipy.spaceforms import ModelKind, lorentz
import numpy as np
import pytest

# Setup

catalog = load_catalog()
p = ChartPoint('North', [[0.2, -0.6], [0.9, 0.1], [-0.3, 0.3]])

# Tests

def test_manifest_loads():
    assert MANIFEST_PATH.exists()
    assert len(catalog) == len(Catalog.load())
    assert catalog['inclusion'].model == ModelKind.EUCLIDEAN
    assert load_catalog() is catalog


def test_regimes_are_covered():
    assert {
        'euclidean-negative', 'euclidean-positive', 'hyperbolic-below', 'hyperbolic-above', 'hyperbolic-overlap',
    } <= catalog.regimes()


def test_make_by_entry_and_constructor():
    f = make('halfspace_sphere_above')
    assert f.name == 'halfspace_sphere_above'
    assert f.model.kind == ModelKind.HALFSPACE
    g = make('bumpy_sphere', eps=0.05, model='Ball')
    assert g.model.kind == ModelKind.BALL
    np.testing.assert_allclose(shape_on_sphere(make('scaled_sphere', mu=-3.0), [[0.0, 0.0, 1.0]])[0], -3.0, rtol=1e-10)


def test_unknown_names_get_suggestions():
    with pytest.raises(CatalogError, match='bumpy_sphere'):
        make('bumby_sphere')
    with pytest.raises(CatalogError, match='halfspace_sphere_above'):
        catalog['halfspace_sphere_abov']
    with pytest.raises(CatalogError):
        make('inclusion', radius=2.0)
    with pytest.raises(CatalogError, match='q0q1'):
        bumpy_sphere(mode='q0q2')


def test_regime_errors():
    with pytest.raises(CatalogError):
        bumpy_sphere(eps=0.3)
    with pytest.raises(CatalogError):
        bumpy_sphere(model='HalfSpace', mu0=-0.5)
    with pytest.raises(CatalogError):
        halfspace_sphere(mu=-0.5)
    with pytest.raises(CatalogError):
        ball_ellipsoid((1.2, 0.5, 0.5))
    with pytest.raises(CatalogError):
        ellipsoid((1.0, -1.0, 1.0))
    with pytest.raises(CatalogError):
        halfspace_graph_sphere(mu=-1.0)


def test_disjoint_and_negative_control_flags():
    assert catalog['inclusion'].disjoint
    assert catalog['halfspace_sphere_above'].disjoint
    assert not catalog['bumpy_ball_sphere'].disjoint
    assert catalog['ball_ellipsoid'].negative_control
    assert not catalog['bumpy_ball_sphere'].negative_control


def test_entry_json_round_trip():
    entry = catalog['ball_ellipsoid']
    assert CatalogEntry(entry.as_json()).as_json() == entry.as_json()


@pytest.mark.parametrize('model', ['Euclidean', 'HalfSpace', 'Ball', 'Hyperboloid'])
@pytest.mark.parametrize('mode', ['q0q1', 'q0q1q2', 'q0^2-q1^2'])
def test_bumpy_jets_match_finite_differences(model, mode):
    f = bumpy_sphere(0.1, model=model, mode=mode)
    exact = jet(f, p)
    approx = jet(f, p, exact=False)
    np.testing.assert_allclose(approx.d1, exact.d1, atol=1e-7)
    np.testing.assert_allclose(approx.d2, exact.d2, atol=1e-4)


def test_bumpy_hyperboloid_stays_on_the_hyperboloid():
    f = bumpy_sphere(0.1, model='Hyperboloid', kappa=2.0)
    X = f.eval(p)
    np.testing.assert_allclose(lorentz(X, X), -0.25, rtol=1e-12)


def test_graph_sphere_jets_match_finite_differences():
    f = halfspace_graph_sphere(0.1)
    np.testing.assert_allclose(jet(f, p, exact=False).d2, jet(f, p).d2, atol=1e-5)


def test_ellipsoid_range():
    lo, hi = ellipsoid_range((2.0, 1.0, 1.0))
    assert (lo, hi) == (-2.0, -0.25)
    lam, _, _ = shape_on_sphere(ellipsoid((2.0, 1.0, 1.0)), SphereMesh.icosphere(1).vertices)
    assert lam.min() >= lo - 1e-9
    assert lam.max() <= hi + 1e-9


def test_catalog_validates():
    results = catalog.validate(SphereMesh.icosphere(1))
    assert results
    assert all(r.passed for r in results), [r for r in results if not r.passed]
    load_catalog(validate=True, mesh=SphereMesh.icosphere(1))
