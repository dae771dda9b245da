"""Sampled symplectic paths, the mean index Δ and the Conley–Zehnder index.

Both indices come from continuously unwrapping the phase of ρ along a path. When two samples are
too far apart in phase, the interval is bisected through the path's generator and the check is
retried; paths without a generator cannot be refined and fail straight away.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from sympidx.config import get_float, get_int
from sympidx.errors import (
    DegenerateEndpointError, InputError, NotSymplecticError, NumericalError, PhaseStepTooLarge, SympIndexError,
)
from sympidx.rho import classify_spectrum, compute_rho
from sympidx.sympcore import (
    direct_sum, resymplectify, symplectic_inverse, symplectic_residual,
)

logger = logging.getLogger(__name__)

FrameGenerator = Callable[[float], np.ndarray]

EXTENSION_COND_LIMIT = 1e8


def validate_path_arrays(times, frames, tol: float = None, identity_tol: float = None) -> tuple[np.ndarray, np.ndarray]:
    """Check a sampled path and return (times, frames) as float arrays.

    Raises InputError naming the first offending sample.
    """
    tol = get_float('symplectic_tol') if tol is None else tol
    identity_tol = get_float('frame_identity_tol') if identity_tol is None else identity_tol
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise InputError("a path needs at least two sample times")
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise InputError(f"times not strictly increasing at index {int(np.argmax(steps <= 0)) + 1}")
    if times[0] != 0.0 or times[-1] != 1.0:
        raise InputError(f"times must run from 0 to 1, got {times[0]!r} to {times[-1]!r}")
    try:
        frames = np.asarray(frames, dtype=float)
    except ValueError:
        raise InputError("frames are not a stack of equally sized matrices") from None
    if frames.ndim != 3 or frames.shape[1] != frames.shape[2] or frames.shape[1] % 2 or frames.shape[1] == 0:
        raise InputError(f"frames must have shape (m, 2n, 2n), got {frames.shape}")
    if frames.shape[0] != times.size:
        raise InputError(f"{frames.shape[0]} frames for {times.size} sample times")
    deviation = float(np.max(np.abs(frames[0] - np.eye(frames.shape[1]))))
    if deviation > identity_tol:
        raise InputError(f"frame 0 is not the identity (deviation {deviation:.3g})")
    for i, frame in enumerate(frames):
        residual = symplectic_residual(frame)
        if residual > tol:
            raise NotSymplecticError(f"frame {i} is not symplectic (residual {residual:.3g})", residual)
    return times, frames


@dataclass(frozen=True, eq=False)
class SymplecticPath:
    half_dim: int
    times: np.ndarray
    frames: np.ndarray
    refinement_budget: int
    generator: FrameGenerator | None = None
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_frames(cls, times, frames, generator: FrameGenerator = None, refinement_budget: int = None,
                    metadata: dict = None, tol: float = None) -> 'SymplecticPath':
        times, frames = validate_path_arrays(times, frames, tol)
        budget = get_int('refinement_budget') if refinement_budget is None else refinement_budget
        times.flags.writeable = False
        frames.flags.writeable = False
        return cls(half_dim=frames.shape[1] // 2, times=times, frames=frames,
                   refinement_budget=budget, generator=generator, metadata=dict(metadata or {}))

    @property
    def endpoint(self) -> np.ndarray:
        return self.frames[-1]

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class IndexReport:
    value: float
    max_phase_step: float
    refinement_depth: int
    oracle_residual: float | None = None

    def to_dict(self) -> dict:
        out = {'value': self.value, 'max_phase_step': self.max_phase_step,
               'refinement_depth': self.refinement_depth}
        if self.oracle_residual is not None:
            out['oracle_residual'] = self.oracle_residual
        return out


@dataclass(frozen=True)
class GapReport:
    passed: bool
    mean_index: float
    cz_index: int
    half_dim: int

    @property
    def gap(self) -> float:
        return abs(self.mean_index - self.cz_index)

    def to_dict(self) -> dict:
        return {'passed': self.passed, 'mean_index': self.mean_index, 'cz_index': self.cz_index,
                'half_dim': self.half_dim, 'gap': self.gap}


@dataclass(frozen=True)
class RecapData:
    """Pairings of the difference of two cappings with c₁ and with ω."""
    c1_pairing: int
    omega_pairing: float = 0.0


# --- Phase tracking ---

def phase_track(frames) -> tuple[np.ndarray, np.ndarray]:
    """ρ-phases of a frame sequence and the wrapped steps between consecutive frames."""
    rhos = np.array([compute_rho(frame) for frame in frames])
    return np.angle(rhos), np.angle(rhos[1:] / rhos[:-1])


class _UnresolvedSteps(Exception):

    def __init__(self, max_step: float):
        super().__init__(max_step)
        self.max_step = max_step


def _refined_frame(generator: FrameGenerator, t: float) -> np.ndarray:
    frame = np.asarray(generator(t), dtype=float)
    residual = symplectic_residual(frame)
    if residual > get_float('resymplectify_threshold'):
        logger.warning("Generator frame at t=%.6g has residual %.3g, re-symplectifying", t, residual)
        frame = resymplectify(frame)
    return frame


def mean_index(path: SymplecticPath, refinement_budget: int = None) -> IndexReport:
    """Δ(Ψ) = (α(1) − α(0))/π for a continuous lift α of the ρ-phase."""
    limit = get_float('phase_step_limit')
    budget = path.refinement_budget if refinement_budget is None else refinement_budget
    times = list(path.times)
    rhos = [compute_rho(frame, trusted=True) for frame in path.frames]
    result = {}

    try:
        for attempt in Retrying(stop=stop_after_attempt(budget + 1),
                                retry=retry_if_exception_type(_UnresolvedSteps), reraise=True):
            with attempt:
                depth = attempt.retry_state.attempt_number - 1
                values = np.array(rhos)
                steps = np.angle(values[1:] / values[:-1])
                bad = np.flatnonzero(np.abs(steps) >= limit)
                if bad.size == 0:
                    result.update(steps=steps, depth=depth)
                    continue
                max_step = float(np.max(np.abs(steps)))
                if path.generator is None:
                    raise PhaseStepTooLarge(
                        f"phase step {max_step:.3g} rad between samples {int(bad[0])} and {int(bad[0]) + 1} "
                        f"exceeds {limit:.3g} and the path has no generator to refine with", max_step, depth)
                if depth == budget:
                    raise _UnresolvedSteps(max_step)
                for i in bad[::-1]:
                    mid = 0.5 * (times[i] + times[i + 1])
                    times.insert(i + 1, mid)
                    rhos.insert(i + 1, compute_rho(_refined_frame(path.generator, mid)))
                logger.debug("Refinement round %d bisected %d intervals", depth + 1, bad.size)
                raise _UnresolvedSteps(max_step)
    except _UnresolvedSteps as exc:
        raise PhaseStepTooLarge(
            f"phase steps still reach {exc.max_step:.3g} rad after {budget} refinement rounds",
            exc.max_step, budget) from None

    steps = result['steps']
    return IndexReport(
        value=float(np.sum(steps) / math.pi),
        max_phase_step=float(np.max(np.abs(steps))) if steps.size else 0.0,
        refinement_depth=result['depth'],
    )


# --- Conley–Zehnder ---

def is_degenerate(matrix, tol: float = None) -> bool:
    tol = get_float('degeneracy_tol') if tol is None else tol
    values = np.linalg.eigvals(np.asarray(matrix, dtype=float))
    return bool(np.min(np.abs(values - 1)) <= tol)


def cz_parity_ok(endpoint, cz: int) -> bool:
    """(−1)^{n − μ_CZ} = sign det(I − Ψ₁)."""
    n = endpoint.shape[0] // 2
    sign = np.sign(np.linalg.det(np.eye(2 * n) - endpoint))
    return sign != 0 and (-1) ** ((n - cz) % 2) == sign


def _extension_correction(endpoint: np.ndarray) -> float:
    """Phase gained (in units of π) by pushing circle eigenvalues of a nondegenerate endpoint to −1."""
    spectrum = classify_spectrum(endpoint)
    total = 0.0
    for cluster in spectrum.circle_clusters():
        theta = float(np.angle(cluster.value))
        signature = 2 * spectrum.krein_table[cluster.value] - cluster.multiplicity
        total += signature * (math.pi - theta) / math.pi
    return total


def unitary_extension_path(endpoint, steps: int = None) -> np.ndarray:
    """Frames from an orthogonal symplectic endpoint to a matrix with spectrum {−1}.

    Each eigen-angle θ ∈ (−π, π] \\ {0} of the unitary X + iY is moved linearly to sign(θ)·π.
    """
    steps = get_int('extension_steps') if steps is None else steps
    endpoint = np.asarray(endpoint, dtype=float)
    n = endpoint.shape[0] // 2
    unitary = endpoint[:n, :n] + 1j * endpoint[n:, :n]
    triangular, q = scipy.linalg.schur(unitary, output='complex')
    angles = np.angle(np.diag(triangular))
    if np.min(np.abs(angles)) <= get_float('degeneracy_tol'):
        raise DegenerateEndpointError("endpoint has eigenvalue 1")
    targets = np.where(angles > 0, math.pi, -math.pi)
    frames = []
    for s in np.linspace(0.0, 1.0, steps + 1):
        u = q @ np.diag(np.exp(1j * (angles + s * (targets - angles)))) @ q.conj().T
        frames.append(np.block([[u.real, -u.imag], [u.imag, u.real]]))
    frames[0] = endpoint
    return np.array(frames)


def normal_form_extension_path(endpoint, steps: int = None) -> np.ndarray:
    """Frames from a diagonalizable nondegenerate endpoint to its normal form.

    Circle eigenvalues e^{iθ} turn monotonically to e^{i·sign(θ)π}, positive real eigenvalues slide
    to 2 or ½ along the log scale, and the rest of the spectrum stays put, so no frame has eigenvalue 1.
    Every frame is a spectral function of the endpoint and therefore symplectic.
    """
    steps = get_int('extension_steps') if steps is None else steps
    endpoint = np.asarray(endpoint, dtype=float)
    circle_tol = get_float('circle_tol')
    values, vectors = scipy.linalg.eig(endpoint)
    if np.min(np.abs(values - 1)) <= get_float('degeneracy_tol'):
        raise DegenerateEndpointError("endpoint has eigenvalue 1")
    condition = float(np.linalg.cond(vectors))
    if condition > EXTENSION_COND_LIMIT:
        raise NumericalError(f"endpoint eigenbasis is ill-conditioned (condition number {condition:.3g})")
    inverse = np.linalg.inv(vectors)

    on_circle = np.abs(np.abs(values) - 1) <= circle_tol
    positive_real = ~on_circle & (np.abs(values.imag) <= circle_tol) & (values.real > 0)
    angles = np.angle(values)
    angle_targets = np.where(angles > 0, math.pi, -math.pi)
    logs = np.log(np.abs(values))
    log_targets = np.sign(logs) * math.log(2.0)

    frames = []
    for s in np.linspace(0.0, 1.0, steps + 1):
        moved = np.where(on_circle, np.exp(1j * (angles + s * (angle_targets - angles))), values)
        moved = np.where(positive_real, np.exp(logs + s * (log_targets - logs)), moved)
        frames.append(np.real(vectors @ np.diag(moved) @ inverse))
    frames[0] = endpoint
    return np.array(frames)


def extension_path(endpoint, steps: int = None) -> np.ndarray:
    """The unitary route for orthogonal endpoints, the spectral normal form otherwise."""
    endpoint = np.asarray(endpoint, dtype=float)
    if _is_orthogonal(endpoint, get_float('symplectic_tol')):
        return unitary_extension_path(endpoint, steps)
    return normal_form_extension_path(endpoint, steps)


def _is_orthogonal(matrix: np.ndarray, tol: float) -> bool:
    return float(np.max(np.abs(matrix.T @ matrix - np.eye(matrix.shape[0])))) <= tol


def _extension_oracle(endpoint: np.ndarray, delta: float, value: int) -> float | None:
    try:
        _, ext_steps = phase_track(extension_path(endpoint))
    except SympIndexError as exc:
        logger.debug("Extension oracle unavailable: %s", exc)
        return None
    return abs(delta + float(np.sum(ext_steps)) / math.pi - value)


def _cz_from_mean(path: SymplecticPath, report: IndexReport, oracle: bool) -> IndexReport:
    endpoint = path.endpoint
    raw = report.value + _extension_correction(endpoint)
    value = round(raw)
    if abs(raw - value) > get_float('integrality_tol'):
        raise NumericalError(f"Conley–Zehnder value {raw:.9g} is not an integer")
    if not cz_parity_ok(endpoint, value):
        raise NumericalError(f"parity of μ_CZ = {value} disagrees with sign det(I − Ψ(1))")
    oracle_residual = _extension_oracle(endpoint, report.value, value) if oracle else None
    return IndexReport(value=int(value), max_phase_step=report.max_phase_step,
                       refinement_depth=report.refinement_depth, oracle_residual=oracle_residual)


def cz_index(path: SymplecticPath, refinement_budget: int = None, oracle: bool = True) -> IndexReport:
    """μ_CZ(Ψ) for a path with nondegenerate endpoint.

    Equals the mean index of Ψ continued to a matrix with spectrum on ℝ⁻ ∪ (off-circle quadruples)
    without crossing eigenvalue 1. With `oracle`, the value is cross-checked against Δ of an explicit
    extension path; oracle_residual stays None when the endpoint's eigenbasis is too ill-conditioned.
    """
    if is_degenerate(path.endpoint):
        raise DegenerateEndpointError("endpoint Ψ(1) has eigenvalue 1; μ_CZ is undefined")
    return _cz_from_mean(path, mean_index(path, refinement_budget), oracle)


def check_index_gap(path: SymplecticPath) -> GapReport:
    if is_degenerate(path.endpoint):
        raise DegenerateEndpointError("endpoint Ψ(1) has eigenvalue 1; μ_CZ is undefined")
    report = mean_index(path)
    cz = _cz_from_mean(path, report, oracle=False).value
    return GapReport(passed=abs(report.value - cz) < path.half_dim, mean_index=report.value, cz_index=cz,
                     half_dim=path.half_dim)


def cz_window(delta_rho: float, cz: int, n: int, k: int, slack: float = 0.0) -> bool:
    """Δρ − n ≤ μ_CZ ≤ Δρ + n − k, optionally widened by `slack` on both sides."""
    if n < 1 or not 0 <= k <= n:
        raise InputError(f"need n ≥ 1 and 0 ≤ k ≤ n, got n={n}, k={k}")
    return delta_rho - n - slack <= cz <= delta_rho + n - k + slack


def recap_mean_index(delta: float, recap: RecapData) -> float:
    """Δ(x̄#A) = Δ(x̄) − 2⟨c₁, A⟩."""
    return delta - 2 * recap.c1_pairing


def recap_cz_index(cz: int, recap: RecapData) -> int:
    return cz - 2 * recap.c1_pairing


def recap_action(action: float, recap: RecapData) -> float:
    return action - recap.omega_pairing


# --- Path operations ---

def _rebuild(times, frames, generator, template: SymplecticPath, **metadata) -> SymplecticPath:
    return SymplecticPath.from_frames(times, frames, generator=generator,
                                      refinement_budget=template.refinement_budget,
                                      metadata={**template.metadata, **metadata})


def restrict_path(path: SymplecticPath, start: int, stop: int) -> SymplecticPath:
    """Samples start..stop, re-parametrized to [0, 1] and re-based to start at the identity."""
    if not 0 <= start < stop < len(path):
        raise InputError(f"cannot restrict a {len(path)}-sample path to samples {start}..{stop}")
    t0, t1 = path.times[start], path.times[stop]
    base_inv = symplectic_inverse(path.frames[start])
    times = (path.times[start:stop + 1] - t0) / (t1 - t0)
    times[0], times[-1] = 0.0, 1.0
    frames = path.frames[start:stop + 1] @ base_inv
    frames[0] = np.eye(frames.shape[1])
    generator = None
    if path.generator is not None:
        def generator(s, outer=path.generator):
            return outer(t0 + s * (t1 - t0)) @ base_inv
    return _rebuild(times, frames, generator, path)


def concatenate_paths(first: SymplecticPath, second: SymplecticPath) -> SymplecticPath:
    """First path on [0, ½], then the second path composed with first(1) on [½, 1]."""
    if first.half_dim != second.half_dim:
        raise InputError("paths live in different dimensions")
    joint = first.endpoint
    times = np.concatenate([first.times / 2, 0.5 + second.times[1:] / 2])
    frames = np.concatenate([first.frames, second.frames[1:] @ joint])
    generator = None
    if first.generator is not None and second.generator is not None:
        def generator(t, a=first.generator, b=second.generator):
            return a(2 * t) if t <= 0.5 else b(2 * t - 1) @ joint
    return _rebuild(times, frames, generator, first)


def iterate_path(path: SymplecticPath, k: int) -> SymplecticPath:
    """Ψ^{(k)}((j + s)/k) = Ψ(s)·Ψ(1)^j for j = 0..k−1."""
    if k < 1:
        raise InputError(f"iteration count must be positive, got {k}")
    endpoint = path.endpoint
    powers = [np.linalg.matrix_power(endpoint, j) for j in range(k)]
    times, frames = [path.times[:1]], [path.frames[:1]]
    for j in range(k):
        times.append((j + path.times[1:]) / k)
        frames.append(path.frames[1:] @ powers[j])
    times = np.concatenate(times)
    times[-1] = 1.0
    generator = None
    if path.generator is not None:
        def generator(t, inner=path.generator):
            j = min(int(t * k), k - 1)
            return inner(t * k - j) @ powers[j]
    return _rebuild(times, np.concatenate(frames), generator, path, iterate=k)


def _same_grid(first: SymplecticPath, second: SymplecticPath) -> None:
    if first.times.shape != second.times.shape or not np.array_equal(first.times, second.times):
        raise InputError("paths are sampled on different time grids")


def pointwise_product(first: SymplecticPath, second: SymplecticPath) -> SymplecticPath:
    """t ↦ first(t)·second(t)."""
    _same_grid(first, second)
    if first.half_dim != second.half_dim:
        raise InputError("paths live in different dimensions")
    generator = None
    if first.generator is not None and second.generator is not None:
        def generator(t, a=first.generator, b=second.generator):
            return a(t) @ b(t)
    return _rebuild(first.times, first.frames @ second.frames, generator, second)


def conjugate_path(path: SymplecticPath, conjugator) -> SymplecticPath:
    """t ↦ T·Ψ(t)·T⁻¹ for a fixed symplectic T."""
    t = np.asarray(conjugator, dtype=float)
    t_inv = symplectic_inverse(t)
    frames = t @ path.frames @ t_inv
    frames[0] = np.eye(frames.shape[1])
    generator = None
    if path.generator is not None:
        def generator(s, inner=path.generator):
            return t @ inner(s) @ t_inv
    return _rebuild(path.times, frames, generator, path)


def direct_sum_path(first: SymplecticPath, second: SymplecticPath) -> SymplecticPath:
    _same_grid(first, second)
    frames = np.array([direct_sum(a, b) for a, b in zip(first.frames, second.frames)])
    generator = None
    if first.generator is not None and second.generator is not None:
        def generator(t, a=first.generator, b=second.generator):
            return direct_sum(a(t), b(t))
    return _rebuild(first.times, frames, generator, first)


def path_from_generator(generator: FrameGenerator, samples: int, metadata: dict = None) -> SymplecticPath:
    """Sample a frame generator on a uniform grid of [0, 1]."""
    if samples < 2:
        raise InputError(f"need at least two samples, got {samples}")
    times = np.linspace(0.0, 1.0, samples)
    frames = [_refined_frame(generator, t) for t in times]
    frames[0] = np.eye(frames[0].shape[0])
    return SymplecticPath.from_frames(times, frames, generator=generator, metadata=metadata)


def holonomy_mean_index(maps, times) -> float:
    """Δ of a quotient holonomy path; zero for a zero-dimensional quotient."""
    maps = np.asarray(maps, dtype=float)
    if maps.shape[1] == 0:
        return 0.0
    return mean_index(SymplecticPath.from_frames(times, maps)).value
