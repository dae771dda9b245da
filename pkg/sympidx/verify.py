"""Seeded property suites for ρ, the mean index, μ_CZ, the coisotropic Maslov index and the flat model.

Each suite draws its cases from rng_for(seed, suite_stream, case), records the worst residual of every
check and keeps the first failing case with the documents needed to reproduce it.
"""

import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from sympidx.config import get_config, get_float, set_config
from sympidx.errors import DegenerateEndpointError, InputError, SympIndexError
from sympidx.flows import (
    EllipsoidSpec, FlatModelSpec, QuadraticHamiltonian, ellipsoid_orbit_index, flat_leafwise_geodesic_path,
    linearized_flow, one_parameter_path, perturbed_flat_path,
)
from sympidx.indices import (
    check_index_gap, conjugate_path, cz_index, cz_window, direct_sum_path, holonomy_mean_index, is_degenerate,
    iterate_path, mean_index, path_from_generator, pointwise_product, restrict_path,
)
from sympidx.maslov import (
    BLOCK_ASSEMBLY, FRAME_TRANSPORT, build_lift, homogeneity_cover, lift_residuals, maslov_index,
)
from sympidx.pathio import canonical_dumps, write_holonomy, write_loop, write_path
from sympidx.rho import compute_rho, rho_determinant_oracle
from sympidx.sampling import (
    case_from_lift, direct_sum_all, draw_coisotropic_lift, homotopy_perturbation, loxodromic_block, random_loop,
    random_one_parameter_path, random_spectral_symplectic, random_symmetric, random_symplectic,
    random_symplectic_matrix, rng_for, rotation_block,
)
from sympidx.sympcore import direct_sum, symplectic_inverse

logger = logging.getLogger(__name__)

PATH_SAMPLES = 128
GAP_SAMPLES = 32
LOOP_SAMPLES = 256
MAX_DIM = 8
MAX_REDRAWS = 16
ORACLE_EVERY = 10


def _finite(value):
    """Non-finite residuals serialize as null."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


@dataclass
class CheckResult:
    name: str
    threshold: float
    cases: int = 0
    max_residual: float = 0.0
    failure: dict | None = None

    @property
    def passed(self) -> bool:
        return self.failure is None

    def record(self, residual: float, case: dict, documents: Callable[[], dict] = None) -> None:
        self.cases += 1
        residual = float(residual)
        if math.isnan(residual):
            residual = math.inf
        self.max_residual = max(self.max_residual, residual)
        if residual > self.threshold and self.failure is None:
            self.failure = {**case, 'residual': residual, 'threshold': self.threshold}
            if documents is not None:
                self.failure['documents'] = documents()
            logger.warning("Check %s failed on case %s (residual %.3g > %.3g)",
                           self.name, case.get('case'), residual, self.threshold)

    def require(self, ok: bool, case: dict, documents: Callable[[], dict] = None) -> None:
        """Boolean checks count a violation as residual 1 against threshold 0."""
        self.record(0.0 if ok else 1.0, case, documents)

    def to_dict(self) -> dict:
        out = {'name': self.name, 'threshold': self.threshold, 'cases': self.cases,
               'max_residual': _finite(self.max_residual), 'passed': self.passed}
        if self.failure is not None:
            out['failure'] = {k: _finite(v) for k, v in self.failure.items() if k != 'documents'}
        return out


@dataclass
class VerifyReport:
    suite: str
    seed: int
    cases: int
    dims: tuple[int, ...] = ()
    checks: dict[str, CheckResult] = field(default_factory=dict)

    def check(self, name: str, threshold: float) -> CheckResult:
        if name not in self.checks:
            self.checks[name] = CheckResult(name=name, threshold=threshold)
        return self.checks[name]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def to_dict(self) -> dict:
        return {'suite': self.suite, 'seed': self.seed, 'cases': self.cases, 'dims': list(self.dims),
                'total_cases': self.cases * len(self.dims), 'passed': self.passed,
                'checks': [c.to_dict() for c in self.checks.values()]}


def _doc(data: bytes) -> dict:
    return json.loads(data)


def _guarded(check: CheckResult, case: dict, fn: Callable[[], float], documents=None) -> None:
    """Run one measurement; library errors count as a failure of the check."""
    try:
        residual = fn()
    except SympIndexError as exc:
        check.record(math.inf, {**case, 'error': f'{type(exc).__name__}: {exc}'}, documents)
        return
    check.record(residual, case, documents)


# --- ρ axioms ---

def _rho_axioms_case(report: VerifyReport, rng: np.random.Generator, n: int, case: dict) -> None:
    orthogonal = random_symplectic_matrix(rng, n, 'orthogonal')
    _guarded(report.check('determinant', 1e-9), case,
             lambda: abs(compute_rho(orthogonal) - rho_determinant_oracle(orthogonal)))

    sample = random_spectral_symplectic(rng, n)
    conjugator = random_symplectic_matrix(rng, n, 'generic').entries
    conjugated = conjugator @ sample.matrix @ symplectic_inverse(conjugator)
    _guarded(report.check('naturality', 1e-8), case,
             lambda: abs(compute_rho(conjugated) - compute_rho(sample.matrix)))

    other = random_spectral_symplectic(rng, 1)
    _guarded(report.check('product', 1e-8), case,
             lambda: abs(compute_rho(direct_sum(sample.matrix, other.matrix))
                         - compute_rho(sample.matrix) * compute_rho(other.matrix)))

    hyperbolic = random_spectral_symplectic(rng, n, circle=False)
    expected = -1.0 if hyperbolic.negative_blocks % 2 else 1.0
    _guarded(report.check('normalization', 0.0), case,
             lambda: abs(compute_rho(hyperbolic.matrix) - expected))

    if n >= 2:
        rotations = [rotation_block(float(rng.uniform(0.1, 2 * math.pi - 0.1))) for _ in range(n - 2)]
        stretches = rng.uniform(0.2, 1.0, size=2)
        angles = rng.uniform(0.2, math.pi - 0.2, size=2)
        t = random_symplectic(rng, n, 'generic', scale=0.3)
        t_inv = symplectic_inverse(t)
        first, second = (
            t @ direct_sum_all(rotations + [loxodromic_block(s, a)]) @ t_inv
            for s, a in zip(stretches, angles)
        )
        _guarded(report.check('off-circle-invariance', 1e-8), case,
                 lambda: abs(compute_rho(first) - compute_rho(second)))


# --- Mean index ---

def _mean_index_case(report: VerifyReport, rng: np.random.Generator, n: int, case: dict) -> None:
    path = random_one_parameter_path(rng, n, PATH_SAMPLES)
    documents = lambda: {'path': _doc(write_path(path))}
    delta = mean_index(path).value
    split = int(rng.integers(1, len(path) - 1))

    _guarded(report.check('concatenation', 1e-8), case, lambda: abs(
        delta - mean_index(restrict_path(path, 0, split)).value
        - mean_index(restrict_path(path, split, len(path) - 1)).value), documents)

    loop = random_loop(rng, n, len(path))
    windings = loop.metadata['windings']
    loop_delta = {}

    def loop_value() -> float:
        if not loop_delta:
            loop_delta['value'] = mean_index(loop).value
        return loop_delta['value']

    _guarded(report.check('loop-integrality', 1e-8), case, lambda: abs(loop_value() - 2 * sum(windings)))
    _guarded(report.check('loop-product', 1e-8), case, lambda: abs(
        mean_index(pointwise_product(loop, path)).value - loop_value() - delta), documents)

    conjugator = random_symplectic(rng, n, 'generic')
    _guarded(report.check('naturality', 1e-8), case,
             lambda: abs(mean_index(conjugate_path(path, conjugator)).value - delta), documents)

    other = random_one_parameter_path(rng, 1, len(path))
    _guarded(report.check('product', 1e-8), case, lambda: abs(
        mean_index(direct_sum_path(path, other)).value - delta - mean_index(other).value), documents)

    bump = homotopy_perturbation(rng, n, 1e-3)
    perturbed = path_from_generator(lambda t: bump(t) @ path.generator(t), len(path))
    _guarded(report.check('homotopy', 1e-6), case,
             lambda: abs(mean_index(perturbed).value - delta), documents)

    _guarded(report.check('iteration', 1e-6), case,
             lambda: abs(mean_index(iterate_path(path, 2)).value - 2 * delta), documents)

    lambdas = tuple(float(x) for x in rng.uniform(0.1, 10.0, size=n))
    spec = EllipsoidSpec(lambdas=lambdas, orbit_index=int(rng.integers(1, n + 1)))
    _guarded(report.check('ellipsoid', 1e-6), {**case, 'lambdas': list(lambdas), 'orbit': spec.orbit_index},
             lambda: _ellipsoid_residual(spec))


def _ellipsoid_residual(spec: EllipsoidSpec) -> float:
    result = ellipsoid_orbit_index(spec)
    return abs(result.mu_numeric - result.mu_closed_form)


# --- μ_CZ gap ---

def _planar_cases(report: VerifyReport) -> None:
    closed_form = report.check('closed-form', 1e-9)
    oracle = report.check('extension-oracle', 1e-6)

    def record(path, expected: int, label: str) -> None:
        try:
            result = cz_index(path)
        except SympIndexError as exc:
            closed_form.record(math.inf, {'case': label, 'error': f'{type(exc).__name__}: {exc}'})
            return
        closed_form.record(abs(result.value - expected), {'case': label})
        if result.oracle_residual is not None:
            oracle.record(result.oracle_residual, {'case': label})

    for theta in (0.25, 0.5, 1.3, 2.7):
        hamiltonian = QuadraticHamiltonian.from_matrix(-2 * math.pi * theta * np.eye(2))
        record(linearized_flow(hamiltonian, 1.0), 2 * math.floor(theta) + 1, f'rotation-{theta}')
    record(one_parameter_path(np.diag([1.0, -1.0]), 16), 0, 'hyperbolic')
    for n in (1, 2, 3):
        hamiltonian = QuadraticHamiltonian.from_matrix(-0.1 * np.eye(2 * n))
        record(linearized_flow(hamiltonian, 1.0, 32), n, f'small-maximum-{n}')


def _nondegenerate_path(rng: np.random.Generator, n: int) -> tuple[object, int]:
    """A random path with nondegenerate endpoint and the number of degenerate draws discarded."""
    for redraws in range(MAX_REDRAWS):
        path = random_one_parameter_path(rng, n, GAP_SAMPLES)
        if not is_degenerate(path.endpoint):
            return path, redraws
    return None, MAX_REDRAWS


def _cz_gap_case(report: VerifyReport, rng: np.random.Generator, n: int, case: dict) -> None:
    gap = report.check('gap', 0.0)
    path, redraws = _nondegenerate_path(rng, n)
    if path is None:
        gap.record(math.inf, {**case, 'error': f'{redraws} consecutive draws had a degenerate endpoint'})
        return
    if redraws:
        case = {**case, 'redraws': redraws}
    documents = lambda: {'path': _doc(write_path(path))}
    try:
        result = check_index_gap(path)
    except SympIndexError as exc:
        gap.record(math.inf, {**case, 'error': f'{type(exc).__name__}: {exc}'}, documents)
        return
    gap.require(result.passed, {**case, 'mean_index': result.mean_index, 'cz_index': result.cz_index},
                documents)

    if case['case'] % ORACLE_EVERY == 0:
        oracle = report.check('extension-oracle', 1e-6)
        try:
            residual = cz_index(path).oracle_residual
        except SympIndexError as exc:
            oracle.record(math.inf, {**case, 'error': f'{type(exc).__name__}: {exc}'}, documents)
            return
        if residual is not None:
            oracle.record(residual, case, documents)


# --- Coisotropic Maslov index ---

def _loop_family(i: int, k: int) -> str:
    if i % 5 == 0:
        return 'constant'
    if i % 7 == 3 and k >= 1:
        return 'half-turn'
    return 'twisted'


def _maslov_case(report: VerifyReport, rng: np.random.Generator, n: int, case: dict) -> None:
    k = int(rng.integers(0, min(n, 3) + 1))
    family = _loop_family(case['case'], k)
    case = {**case, 'codim': k, 'family': family}
    draw = draw_coisotropic_lift(rng, n, k, LOOP_SAMPLES, family)
    try:
        sample = case_from_lift(draw.times, draw.lift_at, draw.model, draw.family, draw.windings)
    except SympIndexError as exc:
        report.check('construction', 0.0).record(math.inf, {**case, 'error': f'{type(exc).__name__}: {exc}'},
                                                 lambda: {'lift': draw.to_document()})
        return
    loop, holonomy = sample.loop, sample.holonomy
    documents = lambda: {'loop': _doc(write_loop(loop)), 'holonomy': _doc(write_holonomy(holonomy))}

    lifts, values = {}, {}

    def strategy_lift(strategy: str):
        if strategy not in lifts:
            lifts[strategy] = build_lift(loop, holonomy, strategy)
        return lifts[strategy]

    def strategy_value(strategy: str) -> float:
        if strategy not in values:
            lift = strategy_lift(strategy) if loop.oriented else None
            values[strategy] = maslov_index(loop, holonomy, strategy, lift=lift).value
        return values[strategy]

    _guarded(report.check('strategy-agreement', 1e-6), case,
             lambda: abs(strategy_value(FRAME_TRANSPORT) - strategy_value(BLOCK_ASSEMBLY)), documents)

    if loop.oriented:
        expected = lambda: -mean_index(sample.lift).value
    else:
        expected = lambda: -mean_index(iterate_path(sample.lift, 2)).value / 2
    _guarded(report.check('generator-lift', 1e-6), case,
             lambda: abs(strategy_value(FRAME_TRANSPORT) - expected()), documents)

    if loop.oriented:
        for strategy in (FRAME_TRANSPORT, BLOCK_ASSEMBLY):
            _guarded(report.check('lift-constraints', 1e-7), {**case, 'strategy': strategy},
                     lambda: max(lift_residuals(loop, holonomy, strategy_lift(strategy).frames)), documents)

    if family == 'constant':
        _guarded(report.check('constant-families', 1e-8), case, lambda: abs(
            strategy_value(FRAME_TRANSPORT) + holonomy_mean_index(holonomy.maps, holonomy.times)), documents)

    if loop.oriented and case['case'] % 4 == 1:
        bump = homotopy_perturbation(rng, n, 1e-3)
        perturbed = case_from_lift(loop.times, lambda t: bump(t) @ sample.lift.generator(t),
                                   loop.subspaces[0].basis, family, sample.windings)
        _guarded(report.check('homotopy', 1e-6), case, lambda: abs(
            maslov_index(perturbed.loop, perturbed.holonomy).value - strategy_value(FRAME_TRANSPORT)), documents)

    if loop.oriented and case['case'] % 10 == 2:
        for degree in (2, 3):
            def cover_residual(degree=degree) -> float:
                cover, cover_holonomy = homogeneity_cover(loop, holonomy, degree)
                return abs(maslov_index(cover, cover_holonomy).value / degree - strategy_value(FRAME_TRANSPORT))
            _guarded(report.check('cover-homogeneity', 1e-6), {**case, 'cover': degree}, cover_residual, documents)


# --- Flat model ---

def _flat_spec(rng: np.random.Generator, n: int, i: int) -> FlatModelSpec:
    k = int(rng.integers(1, n + 1))
    velocity = rng.integers(-2, 3, size=k) / 5
    if not np.any(velocity):
        velocity[0] = 0.2
    metric = None
    if i % 4:
        direction = random_symmetric(rng, k)
        metric = np.eye(k) + 0.1 * direction / max(np.linalg.norm(direction, 2), 1e-12)
    momentum = velocity if metric is None else np.linalg.solve(metric, velocity)
    twist = int(rng.integers(-1, 2))
    radius = max(1.0, 2 * float(np.linalg.norm(momentum)))
    return FlatModelSpec(half_dim=n, codim=k, momentum=tuple(float(p) for p in momentum), radius=radius,
                         metric=metric, capping_twist=twist)


def _flat_spec_document(spec: FlatModelSpec) -> dict:
    return {'half_dim': spec.half_dim, 'codim': spec.codim, 'momentum': list(spec.momentum),
            'radius': spec.radius, 'metric': None if spec.metric is None else spec.metric_matrix.tolist(),
            'capping_twist': spec.capping_twist}


def _flat_model_case(report: VerifyReport, rng: np.random.Generator, n: int, case: dict) -> None:
    spec = _flat_spec(rng, n, case['case'])
    case = {**case, 'codim': spec.codim, 'momentum': list(spec.momentum), 'capping_twist': spec.capping_twist}
    try:
        model = flat_leafwise_geodesic_path(spec, LOOP_SAMPLES)
    except SympIndexError as exc:
        report.check('construction', 0.0).record(math.inf, {**case, 'error': f'{type(exc).__name__}: {exc}'},
                                                 lambda: {'spec': _flat_spec_document(spec)})
        return
    documents = lambda: {'spec': _flat_spec_document(spec), 'path': _doc(write_path(model.path)),
                         'loop': _doc(write_loop(model.loop)), 'holonomy': _doc(write_holonomy(model.holonomy))}
    values = {}

    def measured() -> tuple[float, float]:
        if not values:
            values['mu'] = maslov_index(model.loop, model.holonomy).value
            values['delta'] = mean_index(model.path).value
        return values['mu'], values['delta']

    _guarded(report.check('maslov-plus-mean-index', 1e-6), case, lambda: abs(sum(measured())), documents)
    _guarded(report.check('capping-twist', 1e-6), case,
             lambda: abs(measured()[1] - 2 * spec.capping_twist), documents)
    if spec.capping_twist == 0 and spec.metric is None:
        _guarded(report.check('unperturbed-zero', 1e-8), case,
                 lambda: abs(measured()[0]) + abs(measured()[1]), documents)

    direction = random_symmetric(rng, 2 * n)
    window = report.check('cz-window', 0.0)
    try:
        perturbed = perturbed_flat_path(spec, 1e-3, direction, LOOP_SAMPLES)
        if is_degenerate(perturbed.endpoint):
            return
        cz = cz_index(perturbed, oracle=False).value
        _, delta = measured()
    except DegenerateEndpointError:
        return
    except SympIndexError as exc:
        window.record(math.inf, {**case, 'error': f'{type(exc).__name__}: {exc}'}, documents)
        return
    inside = cz_window(delta, cz, n, spec.codim, slack=get_float('integrality_tol'))
    window.require(inside, {**case, 'cz_index': cz, 'mean_index': delta}, documents)


@dataclass(frozen=True)
class Suite:
    """A property suite; default_cases counts cases per half-dimension."""
    name: str
    stream: int
    default_cases: int
    default_dims: tuple[int, ...]
    run_case: Callable
    fixed_cases: Callable | None = None


SUITES = {
    suite.name: suite for suite in (
        Suite('rho-axioms', 1, 1000, (1, 2, 3, 4), _rho_axioms_case),
        Suite('mean-index-properties', 2, 10, (1, 2, 3), _mean_index_case),
        Suite('cz-gap', 3, 500, (1, 2, 3), _cz_gap_case, _planar_cases),
        Suite('maslov-welldef', 4, 50, (1, 2, 3, 4), _maslov_case),
        Suite('flat-model', 5, 10, (1, 2, 3, 4), _flat_model_case),
    )
}


def parse_dims(text: str) -> tuple[int, ...]:
    """'2' or '1-4' or '1,3' into a tuple of half-dimensions."""
    dims = []
    try:
        for part in text.split(','):
            if '-' in part:
                lo, hi = (int(x) for x in part.split('-', 1))
                dims.extend(range(lo, hi + 1))
            else:
                dims.append(int(part))
    except ValueError:
        raise InputError(f"cannot parse dimensions '{text}'") from None
    if not dims or min(dims) < 1 or max(dims) > MAX_DIM:
        raise InputError(f"dimensions must lie in 1..{MAX_DIM}, got '{text}'")
    return tuple(dims)


@dataclass(frozen=True)
class VerificationConfig:
    """One `verify` invocation: which suites, how many cases, which seed and dimensions."""
    suite: str = 'all'
    cases: int | None = None
    seed: int = 0
    dims: tuple[int, ...] | None = None
    tolerances: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.suite != 'all' and self.suite not in SUITES:
            raise InputError(f"unknown suite '{self.suite}', expected one of {', '.join(SUITES)} or 'all'")
        if self.cases is not None and self.cases < 1:
            raise InputError(f"case count must be at least 1, got {self.cases}")
        if not 0 <= self.seed < 2 ** 64:
            raise InputError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.dims is not None and (not self.dims or min(self.dims) < 1 or max(self.dims) > MAX_DIM):
            raise InputError(f"dimensions must lie in 1..{MAX_DIM}, got {self.dims}")

    @property
    def suite_names(self) -> list[str]:
        return list(SUITES) if self.suite == 'all' else [self.suite]

    def apply_tolerances(self) -> None:
        for key, value in self.tolerances.items():
            set_config(key, value)


def parse_tolerances(overrides: list[str]) -> dict[str, str]:
    """['circle_tol=1e-7', ...] into a dict; keys are checked when applied."""
    out = {}
    for override in overrides or []:
        key, sep, value = override.partition('=')
        if not sep or not key:
            raise InputError(f"tolerance override expects key=value, got '{override}'")
        out[key.strip()] = value.strip()
    return out


def run_verification(config: VerificationConfig) -> list[VerifyReport]:
    config.apply_tolerances()
    return [run_suite(name, config.cases, config.seed, config.dims) for name in config.suite_names]


def run_suite(name: str, cases: int = None, seed: int = 0, dims: tuple[int, ...] = None) -> VerifyReport:
    """Run `cases` cases for every half-dimension in `dims`; case i draws from rng_for(seed, stream, i)."""
    if name not in SUITES:
        raise InputError(f"unknown suite '{name}', expected one of {', '.join(SUITES)} or 'all'")
    suite = SUITES[name]
    cases = suite.default_cases if cases is None else cases
    if cases < 0:
        raise InputError(f"case count must be non-negative, got {cases}")
    dims = tuple(dims or suite.default_dims)
    report = VerifyReport(suite=name, seed=seed, cases=cases, dims=dims)
    started = time.monotonic()
    if suite.fixed_cases is not None:
        suite.fixed_cases(report)
    for d, n in enumerate(dims):
        for j in range(cases):
            i = d * cases + j
            suite.run_case(report, rng_for(seed, suite.stream, i), n, {'case': i, 'seed': seed, 'half_dim': n})
    logger.info("Suite %s: %d cases per dimension over n ∈ %s in %.1fs, %s", name, cases, list(dims),
                time.monotonic() - started, 'passed' if report.passed else 'FAILED')
    return report


def write_artifacts(report: VerifyReport, directory: str = None) -> list[str]:
    """Write one reproducing document per failed check. Returns the written paths."""
    directory = directory or get_config('artifact_dir')
    written = []
    for check in report.checks.values():
        if check.failure is None:
            continue
        os.makedirs(directory, exist_ok=True)
        target = os.path.join(directory, f"{report.suite}-{check.name}-case{check.failure.get('case')}.json")
        with open(target, 'wb') as f:
            f.write(canonical_dumps({'schema_version': '1', 'kind': 'failure', 'suite': report.suite,
                                     'check': check.name,
                                     **{k: _finite(v) for k, v in check.failure.items()}}))
        written.append(target)
    return written
