from immersipy import SphereMesh, load_catalog
from immersipy.verification import (
    Check, check_catalog_entry, check_christoffel, check_degree, check_degree_stability, check_flat_identity,
    check_normal_flow, check_single_signed,
)
import numpy as np

# Setup

catalog = load_catalog()
mesh = SphereMesh.icosphere(1)

# Tests

def test_check_verdicts():
    check = Check('x', 1, {'a': 1.0})
    assert check.passed is True
    assert check.verdict == 'PASS'
    assert check.as_json() == {'name': 'x', 'verdict': 'PASS', 'metrics': {'a': 1.0}, 'artifact': None}
    assert Check('y', False).verdict == 'FAIL'


def test_christoffel_check_writes_its_csv(tmp_path):
    check = check_christoffel(np.random.default_rng(0), samples=10, out=tmp_path)
    assert check.metrics['closed_form_error'] < 1e-12
    assert check.artifact == 'christoffel.csv'
    lines = (tmp_path / check.artifact).read_text().splitlines()
    assert lines[1] == '# check=christoffel'
    assert len(lines) == 3 + 10


def test_catalog_entry_check():
    check = check_catalog_entry(catalog['inclusion'], mesh)
    assert check.passed
    assert check.artifact is None
    assert abs(check.metrics['lambda_min'] + 1.0) < 1e-5


def test_degree_check_names_the_csv(tmp_path):
    check = check_degree(catalog['reflected'], mesh, out=tmp_path)
    assert check.passed
    assert check.metrics['rounded'] == 1
    assert check.artifact == 'degree__reflected.csv'
    assert (tmp_path / check.artifact).exists()


def test_negative_control_passes_by_failing_the_certificate():
    check = check_single_signed(catalog['ball_ellipsoid'], mesh)
    assert check.metrics['verdict'] == 'FAIL'
    assert check.metrics['expected'] == 'FAIL'
    assert check.passed
    assert check_single_signed(catalog['halfspace_sphere'], mesh).passed


def test_flat_identity_check():
    check = check_flat_identity(catalog['halfspace_sphere'], np.random.default_rng(1), samples=20)
    assert check.passed
    assert check.metrics['pairs'] == 40


def test_degree_is_the_same_on_every_level(tmp_path):
    check = check_degree_stability(catalog['reflected'], levels=(1, 2, 3), out=tmp_path)
    assert check.passed
    assert check.metrics['rounded'] == {1: 1, 2: 1, 3: 1}
    assert check.metrics['max_residual'] < 0.1
    assert len((tmp_path / check.artifact).read_text().splitlines()) == 3 + 3


def test_normal_flow_check_on_the_ball():
    check = check_normal_flow(catalog['bumpy_ball_sphere'], mesh, radii=(0.5, 2.0))
    assert check.passed
    assert check.metrics['max_law_error'] <= 1e-6


def test_round_sphere_tolerances_are_tight():
    for name in ('inclusion', 'minus_inclusion', 'reflected', 'ball_sphere', 'halfspace_sphere'):
        assert catalog[name].tolerance <= 1e-7
