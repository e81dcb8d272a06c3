"""Command-line experiment runner.

    python -m immersipy curvature --config experiment.json
    python -m immersipy degree --immersion reflected --mesh-level 4
    python -m immersipy verify-all --out out/verify
    python -m immersipy catalog

Exit codes: 0 all verdicts PASS, 2 bad config, 3 a verdict FAILed, 4 any other library error.
"""
import argparse
import logging
import pathlib
import sys
import typing as t

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .catalog import load_catalog, make
from .config import OPERATIONS, ExperimentConfig
from .datamodels import CurvatureInterval
from .deformations import (
    euclidean_retraction, halfspace_retraction, normal_flow_path, overlap_path, search_overlap_tau,
)
from .errors import CatalogError, ConfigError, DeformationError, DomainError, ImmersipyError
from .exports import curvature_rows, homotopy_rows, jacobian_rows, write_csv, write_obj, write_summary
from .gaussmaps import (
    GaussKind, SphereMap, collision_scan, degree, designated_gauss, jacobian_field, predicted_orientation,
)
from .immersions import curvature_range, in_model, shape_field
from .meshes import SphereMesh
from .spaceforms import ModelKind
from .trackers import track
from .verification import Check, verify_all

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERDICT = 3
EXIT_ERROR = 4


def resolve_immersion(config: ExperimentConfig):
    try:
        f = make(config.immersion, **config.params)
    except CatalogError as e:
        raise ConfigError('immersion', str(e)) from e
    target = config.target_model(f.model.ambient_dim)
    if target is not None and target != f.model:
        f = in_model(f, target)
    return f


def _mesh(config: ExperimentConfig, n: int) -> SphereMesh:
    return SphereMesh.for_dimension(n, config.mesh_level)


def _gauss_map(config: ExperimentConfig, f) -> SphereMap:
    if config.gauss == 'designated':
        return designated_gauss(f)
    return SphereMap.gauss(f, GaussKind(config.gauss))


def run_curvature(config: ExperimentConfig, out: pathlib.Path) -> t.List[Check]:
    f = resolve_immersion(config)
    mesh = _mesh(config, f.n)
    field = shape_field(f, mesh)
    found = curvature_range(f, mesh, config.interval, field=field)
    write_csv(out / 'curvature.csv', *curvature_rows(mesh, field), {'immersion': f.name, 'mesh_level': config.mesh_level})
    if mesh.faces is not None and f.model.coord_dim == 3:
        write_obj(out / 'curvature.obj', mesh, f.sphere_eval(mesh.vertices), {'lambda': field.lambdas, 'gaussian': field.gaussian})
    passed = found.inside is not False
    return [Check(f'curvature:{f.name}', passed, found.as_json(), 'curvature.csv')]


def _jacobian_artifacts(out: pathlib.Path, name: str, field, mesh: SphereMesh) -> str:
    filename = f'{name}.csv'
    write_csv(out / filename, *jacobian_rows(field), {'map': field.map_name})
    if mesh.faces is not None:
        write_obj(out / f'{name}.obj', mesh, field.images, {'det': field.dets})
    return filename


def _disjoint(interval: CurvatureInterval, kappa: float) -> bool:
    if kappa == 0.0:
        return not bool(interval.contains(0.0, tol=0.0))
    return interval.below(-kappa) or interval.above(kappa)


def run_gauss(config: ExperimentConfig, out: pathlib.Path) -> t.List[Check]:
    f = resolve_immersion(config)
    mesh = _mesh(config, f.n)
    sphere_map = _gauss_map(config, f)
    field = jacobian_field(sphere_map, mesh)
    artifact = _jacobian_artifacts(out, 'gauss', field, mesh)
    scan = collision_scan(field.images, mesh)
    metrics = {**field.as_json(), 'collision_distance': scan.min_distance}
    passed = field.certified
    if config.interval is not None and config.gauss == 'designated' and _disjoint(config.interval, f.model.kappa):
        predicted = predicted_orientation(f.model.kappa, f.n, config.interval)
        metrics['predicted_orientation'] = predicted.value
        passed = passed and field.sign == (1 if predicted.value == 'preserving' else -1)
    return [Check(f'gauss:{sphere_map.name}', passed, metrics, artifact)]


def run_degree(config: ExperimentConfig, out: pathlib.Path) -> t.List[Check]:
    f = resolve_immersion(config)
    mesh = _mesh(config, f.n)
    sphere_map = _gauss_map(config, f)
    field = jacobian_field(sphere_map, mesh)
    report = degree(sphere_map, mesh, field=field, strict=False)
    artifact = _jacobian_artifacts(out, 'degree', field, mesh)
    return [Check(f'degree:{sphere_map.name}', report.residual < 0.1, report.as_json(), artifact)]


def run_deform(config: ExperimentConfig, out: pathlib.Path) -> t.List[Check]:
    f = resolve_immersion(config)
    mesh = _mesh(config, f.n)
    d = config.deformation
    interval = config.interval
    track_kwargs = {'workers': config.threads, 'max_refinements': d.max_refinements, 'verbose': config.verbose}
    if d.kind == 'OverlapPath' and d.tau == 'search':
        if interval is None:
            raise ConfigError('interval', 'the tau search needs an interval')
        try:
            tau, report = search_overlap_tau(f, d.mu, interval, mesh, steps=d.steps, **track_kwargs)
        except DeformationError as e:
            write_csv(out / 'homotopy.csv', ['s', 'lambda', 'margin', 'error'], [[e.s, e.value, e.margin, str(e)]])
            return [Check(f'deform:{f.name}', False, {'error': str(e)}, 'homotopy.csv')]
    else:
        if d.kind == 'EuclideanRetraction':
            path = euclidean_retraction(f, d.mu, interval)
        elif d.kind == 'HalfSpaceRetraction':
            if f.model.kind != ModelKind.HALFSPACE:
                f = in_model(f, f.model.with_kind(ModelKind.HALFSPACE))
            path = halfspace_retraction(f, d.mu, interval)
        elif d.kind == 'NormalFlow':
            path = normal_flow_path(f, d.r_end, interval)
        else:
            path = overlap_path(f, d.mu, d.tau, interval)
        report = track(path, mesh, d.steps, **track_kwargs)
    write_csv(out / 'homotopy.csv', *homotopy_rows(report), {'kind': report.kind, 'immersion': f.name})
    return [Check(f'deform:{report.name}', report.passed, report.as_json(), 'homotopy.csv')]


def run_verify_all(config: ExperimentConfig, out: pathlib.Path) -> t.List[Check]:
    steps = 33 if config.deformation is None else config.deformation.steps
    return verify_all(config.mesh_level, steps, out, config.seed, config.threads, config.verbose)


RUNNERS = {
    'curvature': run_curvature,
    'gauss': run_gauss,
    'degree': run_degree,
    'deform': run_deform,
    'verify-all': run_verify_all,
}


def run(config: ExperimentConfig, console: Console | None = None) -> int:
    """Runs one configured operation, writes summary.json next to its CSVs, returns the exit status."""
    out = pathlib.Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    checks = RUNNERS[config.operation](config, out)
    passed = all(c.passed for c in checks)
    summary = {
        'config': config.as_json(),
        'checks': [c.as_json() for c in checks],
        'verdict': 'PASS' if passed else 'FAIL',
    }
    write_summary(out / 'summary.json', summary)
    if console is not None:
        console.print(checks_table(checks, f'{config.operation}: {summary["verdict"]}'))
    if not passed:
        first = next(c for c in checks if not c.passed)
        logger.error('%s failed; see %s', first.name, out / (first.artifact or 'summary.json'))
        return EXIT_VERDICT
    return EXIT_OK


def checks_table(checks: t.Sequence[Check], title: str) -> Table:
    table = Table(title=title)
    table.add_column('check')
    table.add_column('verdict')
    table.add_column('artifact')
    for c in checks:
        style = 'green' if c.passed else 'red'
        table.add_row(c.name, f'[{style}]{c.verdict}[/{style}]', c.artifact or '')
    return table


def catalog_table() -> Table:
    table = Table(title='catalog')
    for column in ('name', 'model', 'interval', 'expected lambda', 'provenance', 'degree', 'regime'):
        table.add_column(column)
    for e in load_catalog():
        lo, hi = e.expected_lambda
        table.add_row(e.name, e.model.value, str(e.interval), f'[{lo:g}, {hi:g}]', e.provenance, '' if e.expected_degree is None else str(e.expected_degree), e.regime)
    return table


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='immersipy', description='Curvature-constrained immersed spheres in space forms.')
    sub = parser.add_subparsers(dest='command', required=True)
    for name in OPERATIONS:
        p = sub.add_parser(name)
        p.add_argument('--config', type=pathlib.Path, help='JSON experiment config')
        p.add_argument('--immersion', help='catalog entry or constructor name')
        p.add_argument('--interval', help='constraint interval, e.g. "(-inf, -1)"')
        p.add_argument('--gauss', help='designated, Euclidean, Flat, Visual or Check')
        p.add_argument('--threads', type=int)
        p.add_argument('--mesh-level', type=int, dest='mesh_level')
        p.add_argument('--seed', type=int)
        p.add_argument('--out')
        p.add_argument('-v', '--verbose', action='store_true', default=None)
    p = sub.add_parser('catalog', help='list the shipped catalog')
    p.add_argument('--validate', action='store_true', help='re-derive every curvature range')
    p.add_argument('--mesh-level', type=int, dest='mesh_level', default=1)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    flags = {
        'immersion': args.immersion, 'gauss': args.gauss, 'threads': args.threads,
        'mesh_level': args.mesh_level, 'seed': args.seed, 'out': args.out, 'verbose': args.verbose,
    }
    if args.interval is not None:
        try:
            flags['interval'] = CurvatureInterval.parse(args.interval)
        except (DomainError, ValueError) as e:
            raise ConfigError('interval', str(e)) from e
    if args.config is not None:
        config = ExperimentConfig.load(args.config)
        flags['operation'] = args.command
        return config.override(**flags)
    return ExperimentConfig(args.command, **{k: v for k, v in flags.items() if v is not None})


def main(argv: t.Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    console = Console()
    logging.basicConfig(
        level=logging.INFO if getattr(args, 'verbose', None) else logging.WARNING,
        format='%(message)s',
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
    )
    if args.command == 'catalog':
        try:
            catalog = load_catalog()
            if args.validate:
                results = catalog.validate(SphereMesh.icosphere(args.mesh_level))
                console.print(checks_table([Check(f'catalog:{r.entry}', r.passed, artifact='') for r in results], 'catalog validation'))
                return EXIT_OK if all(r.passed for r in results) else EXIT_VERDICT
        except ImmersipyError as e:
            logger.error('%s', e)
            return EXIT_ERROR
        console.print(catalog_table())
        return EXIT_OK
    try:
        config = config_from_args(args)
        return run(config, console)
    except ConfigError as e:
        logger.error('config error in %s', e)
        return EXIT_CONFIG
    except ImmersipyError as e:
        logger.error('%s: %s', type(e).__name__, e)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
