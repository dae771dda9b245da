"""Command-line entry point: `python -m sympidx <command>`.

JSON results go to standard output; diagnostics go to standard error through logging.
Exit codes: 0 success, 2 input error, 3 numerical failure, 4 property violation.
"""

import argparse
import logging
import os
import sys
from fractions import Fraction

import numpy as np

from sympidx import __version__, configure_logging
from sympidx.config import get_all_config, set_config
from sympidx.errors import InputError, PropertyViolation, SympIndexError
from sympidx.flows import (
    EllipsoidSpec, FlatModelSpec, ellipsoid_orbit_index, ellipsoid_path, ellipsoid_tangent_loop,
    flat_leafwise_geodesic_path,
)
from sympidx.indices import check_index_gap, cz_index, mean_index
from sympidx.maslov import STRATEGIES, maslov_index, well_definedness_check
from sympidx.pathio import (
    canonical_dumps, content_hash, read_holonomy, read_loop, read_matrix, read_path, write_holonomy, write_loop,
    write_matrix, write_path,
)
from sympidx.report import render_html
from sympidx.rho import classify_spectrum, rho_from_classification
from sympidx.sampling import FAMILIES, random_symplectic_matrix
from sympidx.verify import SUITES, VerificationConfig, parse_dims, parse_tolerances, run_verification, write_artifacts

logger = logging.getLogger(__name__)


def _read(path: str) -> bytes:
    try:
        with open(path, 'rb') as f:
            return f.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, data: bytes) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(data)
    logger.info("Wrote %s", path)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(Fraction(part.strip())) for part in text.split(','))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"cannot parse number list '{text}'") from None


def _emit(doc: dict) -> None:
    sys.stdout.write(canonical_dumps(doc).decode('utf-8') + '\n')


# --- Commands ---

def cmd_rho(args) -> int:
    matrix = read_matrix(_read(args.matrix))
    spectrum = classify_spectrum(matrix)
    value = rho_from_classification(spectrum)
    _emit({'rho': [value.real, value.imag], 'phase': float(np.angle(value)),
           'spectrum': spectrum.to_dict(), 'residual': matrix.residual})
    return 0


def cmd_mean_index(args) -> int:
    _emit(mean_index(read_path(_read(args.path))).to_dict())
    return 0


def cmd_cz_index(args) -> int:
    _emit(cz_index(read_path(_read(args.path))).to_dict())
    return 0


def cmd_gap_check(args) -> int:
    report = check_index_gap(read_path(_read(args.path)))
    _emit(report.to_dict())
    return 0 if report.passed else PropertyViolation.exit_code


def cmd_maslov(args) -> int:
    loop = read_loop(_read(args.loop))
    holonomy = read_holonomy(_read(args.holonomy))
    if args.strategy == 'both':
        report = well_definedness_check(loop, holonomy)
        _emit(report.to_dict())
        return 0 if report.passed else PropertyViolation.exit_code
    _emit({**maslov_index(loop, holonomy, args.strategy).to_dict(), 'oriented': loop.oriented})
    return 0


def cmd_ellipsoid(args) -> int:
    spec = EllipsoidSpec(lambdas=_floats(args.lambdas), orbit_index=args.orbit)
    if args.write_path:
        _write(args.write_path, write_path(ellipsoid_path(spec, args.samples, args.periods)))
    doc = ellipsoid_orbit_index(spec, args.samples, args.periods).to_dict()
    if args.tangent_loop:
        case = ellipsoid_tangent_loop(spec, args.samples, args.periods)
        doc['tangent_loop'] = {**maslov_index(case.loop, case.holonomy).to_dict(), 'oriented': case.loop.oriented}
    _emit(doc)
    return 0


def cmd_flat_model(args) -> int:
    text = args.momentum or args.velocity
    vector = _floats(text)
    k = len(vector)
    if args.codim is not None and args.codim != k:
        raise InputError(f"--codim {args.codim} does not match the {k} entries of '{text}'")
    metric = None
    if args.metric:
        entries = _floats(args.metric)
        if len(entries) != k * k:
            raise InputError(f"metric needs {k * k} entries, got {len(entries)}")
        metric = np.array(entries).reshape(k, k)
    radius = args.radius
    if args.momentum:
        momentum = vector
    else:
        momentum = tuple(float(x) for x in np.linalg.solve(np.eye(k) if metric is None else metric, vector))
        radius = max(radius, 2 * float(np.linalg.norm(momentum)))
    spec = FlatModelSpec(half_dim=args.half_dim or k, codim=k, momentum=momentum,
                         radius=radius, metric=metric, capping_twist=args.twist)
    case = flat_leafwise_geodesic_path(spec, args.samples)
    mu = maslov_index(case.loop, case.holonomy).value
    delta = mean_index(case.path).value
    if args.write_dir:
        _write(os.path.join(args.write_dir, 'path.json'), write_path(case.path))
        _write(os.path.join(args.write_dir, 'loop.json'), write_loop(case.loop))
        _write(os.path.join(args.write_dir, 'holonomy.json'), write_holonomy(case.holonomy))
    _emit({'period': case.period, 'maslov_index': mu, 'mean_index': delta, 'residual': abs(mu + delta)})
    return 0


def cmd_verify(args) -> int:
    config = VerificationConfig(suite=args.suite, cases=args.cases, seed=args.seed,
                                dims=parse_dims(args.dims) if args.dims else None,
                                tolerances=parse_tolerances(args.tol))
    reports = run_verification(config)
    docs = [r.to_dict() for r in reports]
    passed = all(r.passed for r in reports)
    if not passed:
        for report in reports:
            for target in write_artifacts(report, args.artifact_dir):
                logger.error("Failure case written to %s", target)
    if args.html_report:
        _write(args.html_report, ''.join(render_html(doc) for doc in docs).encode('utf-8'))
    _emit({'passed': passed, 'suites': docs})
    return 0 if passed else PropertyViolation.exit_code


def cmd_random_matrix(args) -> int:
    matrix = random_symplectic_matrix(args.seed, args.half_dim, args.family)
    data = write_matrix(matrix)
    if args.output:
        _write(args.output, data)
    _emit({'family': args.family, 'seed': args.seed, 'half_dim': args.half_dim,
           'residual': matrix.residual, 'sha256': content_hash(data)})
    return 0


def cmd_config(args) -> int:
    _emit({'config': get_all_config()})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='sympidx', description=__doc__.splitlines()[0])
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--log-level', help='DEBUG, INFO, WARNING or ERROR (default from SYMPIDX_LOG_LEVEL)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('rho', help='ρ of a symplectic matrix document')
    p.add_argument('--matrix', required=True)
    p.set_defaults(func=cmd_rho)

    for name, func, text in (('mean-index', cmd_mean_index, 'mean index Δ of a path document'),
                             ('cz-index', cmd_cz_index, 'Conley–Zehnder index of a path document'),
                             ('gap-check', cmd_gap_check, 'check |Δ − μ_CZ| < n for a path document')):
        p = sub.add_parser(name, help=text)
        p.add_argument('--path', required=True)
        p.set_defaults(func=func)

    p = sub.add_parser('maslov', help='Maslov index of a coisotropic loop with holonomy')
    p.add_argument('--loop', required=True)
    p.add_argument('--holonomy', required=True)
    p.add_argument('--strategy', choices=STRATEGIES + ('both',), default='frame-transport')
    p.set_defaults(func=cmd_maslov)

    p = sub.add_parser('ellipsoid', help='orbit index of a principal orbit on an ellipsoid')
    p.add_argument('--lambdas', required=True, help='comma-separated positive weights')
    p.add_argument('--orbit', type=int, required=True, help='1-based index of the principal orbit')
    p.add_argument('--samples', type=int)
    p.add_argument('--periods', type=int, default=1)
    p.add_argument('--write-path', help='also write the linearized flow as a path document')
    p.add_argument('--tangent-loop', action='store_true',
                   help='also report the Maslov index of the loop of tangent hyperplanes of the energy level')
    p.set_defaults(func=cmd_ellipsoid)

    p = sub.add_parser('flat-model', help='closed leafwise geodesic in the flat coisotropic model')
    orbit = p.add_mutually_exclusive_group(required=True)
    orbit.add_argument('--momentum', help='comma-separated momentum p ∈ ℝᵏ (fractions allowed)')
    orbit.add_argument('--velocity', help='comma-separated leaf velocity v = Kp; the radius grows to hold p = K⁻¹v')
    p.add_argument('--codim', type=int, help='k, checked against the number of entries')
    p.add_argument('--half-dim', type=int, help='n (default k)')
    p.add_argument('--radius', type=float, default=1.0)
    p.add_argument('--metric', help='row-major k×k metric K for ρ = ½pᵀKp')
    p.add_argument('--twist', type=int, default=0, help='capping twist w')
    p.add_argument('--samples', type=int)
    p.add_argument('--write-dir', help='write path, loop and holonomy documents here')
    p.set_defaults(func=cmd_flat_model)

    p = sub.add_parser('verify', help='run seeded property suites')
    p.add_argument('--suite', choices=list(SUITES) + ['all'], default='all')
    p.add_argument('--cases', type=int)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--dims', help="half-dimensions, e.g. '2' or '1-4'")
    p.add_argument('--tol', action='append', metavar='KEY=VALUE', help='override a tolerance for this run')
    p.add_argument('--artifact-dir')
    p.add_argument('--html-report', help='write a sanitized HTML summary here')
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser('random-matrix', help='seeded random symplectic matrix document')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--half-dim', type=int, required=True)
    p.add_argument('--family', choices=FAMILIES, default='generic')
    p.add_argument('--output', help='write the matrix document here')
    p.set_defaults(func=cmd_random_matrix)

    p = sub.add_parser('config', help='show effective configuration')
    p.set_defaults(func=cmd_config)
    return parser


def main(argv: list[str] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.log_level:
            set_config('log_level', args.log_level.upper())
        configure_logging()
        return args.func(args)
    except SympIndexError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        _emit({'error': type(exc).__name__, 'message': str(exc), 'exit_code': exc.exit_code})
        return exc.exit_code
