from immersipy import CurvatureInterval, ExperimentConfig, SphereMesh
from immersipy.catalog import inclusion
from immersipy.cli import EXIT_CONFIG, EXIT_ERROR, EXIT_OK, EXIT_VERDICT, build_parser, config_from_args, main, run
from immersipy.config import DeformationConfig
from immersipy.errors import ConfigError
from immersipy.exports import CSV_VERSION, round_floats, write_csv, write_obj, write_summary
from immersipy.immersions import shape_field
import json
import math
import numpy as np
import pytest

# Setup

def write_config(tmp_path, data, name='experiment.json'):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path

# Tests

def test_unknown_config_field_suggests_a_fix():
    with pytest.raises(ConfigError, match="did you mean 'mesh_level'") as info:
        ExperimentConfig.from_json({'operation': 'degree', 'mesh_levle': 2})
    assert info.value.field == 'mesh_levle'


def test_config_validation():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig('deform')
    assert info.value.field == 'deformation'
    with pytest.raises(ConfigError):
        ExperimentConfig('degree', mesh_level=9)
    with pytest.raises(ConfigError):
        ExperimentConfig('curvature', gauss='visual')
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json({'operation': 'degree', 'interval': '[1, 0]'})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json({'operation': 'degree', 'threads': 'four'})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json({'operation': 'degree', 'model': {'kind': 'Sphere'}})


def test_deformation_config():
    d = DeformationConfig.from_json({'kind': 'OverlapPath', 'mu': -1.5, 'tau': 0.75})
    assert d.tau == 0.75
    assert d.as_json()['kind'] == 'OverlapPath'
    with pytest.raises(ConfigError):
        DeformationConfig.from_json({'kind': 'NormalFlow'})
    with pytest.raises(ConfigError):
        DeformationConfig.from_json({'kind': 'OverlapPath', 'mu': -1.5, 'tau': 1.0})
    with pytest.raises(ConfigError, match='HalfSpaceRetraction'):
        DeformationConfig.from_json({'kind': 'HalfspaceRetraction', 'mu': -2})


def test_config_round_trip(tmp_path):
    data = {
        'operation': 'deform', 'immersion': 'bumpy_halfspace_sphere', 'interval': '(-inf, -1)',
        'mesh_level': 1, 'deformation': {'kind': 'HalfSpaceRetraction', 'mu': -2.0, 'steps': 3},
    }
    config = ExperimentConfig.load(write_config(tmp_path, data))
    assert config.interval == CurvatureInterval(-math.inf, -1.0)
    again = ExperimentConfig.from_json(config.as_json())
    assert again.as_json() == config.as_json()


def test_flags_override_config(tmp_path):
    path = write_config(tmp_path, {'operation': 'curvature', 'mesh_level': 3})
    args = build_parser().parse_args(['degree', '--config', str(path), '--mesh-level', '1', '--interval', '(0, inf)'])
    config = config_from_args(args)
    assert config.operation == 'degree'
    assert config.mesh_level == 1
    assert config.interval == CurvatureInterval(0.0, math.inf)


def test_malformed_config_exits_2(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"operation": "degree",')
    assert main(['degree', '--config', str(path)]) == EXIT_CONFIG
    assert main(['degree', '--config', str(tmp_path / 'missing.json')]) == EXIT_CONFIG
    assert main(['degree', '--immersion', 'no_such_sphere', '--out', str(tmp_path)]) == EXIT_CONFIG


def test_degree_of_reflected_sphere(tmp_path):
    out = tmp_path / 'degree'
    assert main(['degree', '--immersion', 'reflected', '--mesh-level', '2', '--out', str(out)]) == EXIT_OK
    summary = json.loads((out / 'summary.json').read_text())
    assert summary['verdict'] == 'PASS'
    assert summary['checks'][0]['metrics']['rounded'] == 1
    assert (out / 'degree.csv').read_text().startswith(f'# immersipy_csv_version={CSV_VERSION}\n')
    assert (out / 'degree.obj').exists()


def test_summary_is_deterministic(tmp_path):
    for name in ('a', 'b'):
        assert main(['curvature', '--immersion', 'ellipsoid', '--mesh-level', '1', '--out', str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / 'a' / 'summary.json').read_text().replace('/a"', '/b"') == (tmp_path / 'b' / 'summary.json').read_text()


def test_curvature_outside_interval_fails(tmp_path):
    out = tmp_path / 'curvature'
    code = main(['curvature', '--immersion', 'ellipsoid', '--interval', '(-1, 0)', '--mesh-level', '1', '--out', str(out)])
    assert code == EXIT_VERDICT
    assert json.loads((out / 'summary.json').read_text())['verdict'] == 'FAIL'
    assert (out / 'curvature.obj').exists()


def test_deform_run(tmp_path):
    config = ExperimentConfig(
        'deform', immersion='ellipsoid', mesh_level=0, out=str(tmp_path),
        deformation=DeformationConfig('EuclideanRetraction', mu=-1.0, steps=3),
    )
    assert run(config) == EXIT_OK
    lines = (tmp_path / 'homotopy.csv').read_text().splitlines()
    assert lines[0] == f'# immersipy_csv_version={CSV_VERSION}'
    assert lines[3].startswith('s,immersion,lambda_min')
    assert len(lines) == 4 + 3


def test_domain_failures_exit_4(tmp_path):
    # a half-space retraction of a ball sphere whose target lies outside the interval
    path = write_config(tmp_path, {
        'operation': 'deform', 'immersion': 'ball_sphere', 'interval': '(-inf, -3)', 'mesh_level': 0,
        'deformation': {'kind': 'HalfSpaceRetraction', 'mu': -2.0, 'steps': 3}, 'out': str(tmp_path / 'out'),
    })
    assert main(['deform', '--config', str(path)]) == EXIT_ERROR


def test_catalog_listing():
    assert main(['catalog']) == EXIT_OK


def test_round_floats():
    data = {'a': 0.1 + 0.2, 'b': [1e-12, math.inf, np.float64(2.0)], 'c': True, 'd': np.int64(3), 'e': -0.0}
    assert round_floats(data) == {'a': 0.3, 'b': [0.0, 'inf', 2.0], 'c': True, 'd': 3, 'e': 0.0}
    assert round_floats(True) is True


def test_write_csv_and_summary(tmp_path):
    path = write_csv(tmp_path / 'x.csv', ['s', 'value'], [[0.5, None], [1, np.float64(0.25)]], {'kind': 'test'})
    lines = path.read_text().splitlines()
    assert lines == [f'# immersipy_csv_version={CSV_VERSION}', '# kind=test', 's,value', '0.5,', '1,0.25']
    summary = write_summary(tmp_path / 's.json', {'z': 1.0000000001, 'a': 1})
    assert summary.read_text() == '{\n  "a": 1,\n  "z": 1.0\n}\n'


def test_write_obj(tmp_path):
    mesh = SphereMesh.icosphere(1)
    field = shape_field(inclusion(), mesh)
    path = write_obj(tmp_path / 'sphere.obj', mesh, attributes={'lambda': field.lambdas})
    text = path.read_text().splitlines()
    assert text[1] == '# attributes lambda[0] lambda[1]'
    assert sum(1 for line in text if line.startswith('v ')) == len(mesh)
    assert sum(1 for line in text if line.startswith('f ')) == len(mesh.faces)
    assert sum(1 for line in text if line.startswith('#a ')) == len(mesh)
