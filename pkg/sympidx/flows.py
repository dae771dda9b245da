"""Linearized Hamiltonian flows, the ellipsoid example and the flat coisotropic model."""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from sympidx.config import get_float, get_int
from sympidx.errors import InputError, NonClosingOrbitError
from sympidx.indices import SymplecticPath, mean_index, path_from_generator, pointwise_product
from sympidx.sympcore import Subspace, frame_indices, plane_rotation, standard_j

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    """H(z) = ½ zᵀSz."""
    half_dim: int
    hessian: np.ndarray

    @classmethod
    def from_matrix(cls, hessian, tol: float = 1e-12) -> 'QuadraticHamiltonian':
        s = np.asarray(hessian, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2 or s.shape[0] == 0:
            raise InputError(f"Hessian must be a square matrix of even size, got shape {s.shape}")
        asymmetry = float(np.max(np.abs(s - s.T)))
        if asymmetry > tol * max(1.0, float(np.max(np.abs(s)))):
            raise InputError(f"Hessian is not symmetric (|S − Sᵀ| = {asymmetry:.3g})")
        return cls(half_dim=s.shape[0] // 2, hessian=(s + s.T) / 2)

    def value(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return 0.5 * float(z @ self.hessian @ z)


def hamiltonian_generator(hessian: np.ndarray) -> np.ndarray:
    """A = −J₀S, so that ż = Az is ẋ = ∂H/∂y, ẏ = −∂H/∂x."""
    return -standard_j(hessian.shape[0] // 2) @ hessian


def safe_sample_count(generator: np.ndarray, requested: int) -> int:
    """Samples needed on [0, 1] so that ρ(exp(tA)) moves less than π/4 per step."""
    rate = 0.5 * float(np.sum(np.abs(np.linalg.eigvals(generator).imag)))
    needed = int(math.ceil(rate / (math.pi / 4))) + 1
    return max(requested, needed)


def one_parameter_path(generator: np.ndarray, samples: int = None, metadata: dict = None) -> SymplecticPath:
    """t ↦ exp(tA) on [0, 1] for a Hamiltonian matrix A."""
    requested = get_int('default_samples') if samples is None else samples
    count = safe_sample_count(generator, requested)
    if count > requested:
        logger.info("Raising sample count from %d to %d to resolve the flow's rotation", requested, count)

    def frame_at(t: float) -> np.ndarray:
        return scipy.linalg.expm(t * generator)

    return path_from_generator(frame_at, count, metadata=metadata)


def linearized_flow(hamiltonian: QuadraticHamiltonian, duration: float, samples: int = None) -> SymplecticPath:
    """Linearized flow of a quadratic Hamiltonian over [0, duration], reparametrized to [0, 1]."""
    if duration <= 0:
        raise InputError(f"duration must be positive, got {duration}")
    generator = duration * hamiltonian_generator(hamiltonian.hessian)
    return one_parameter_path(generator, samples, metadata={'source': 'linearized_flow', 'duration': duration})


@dataclass(frozen=True)
class CappedOrbitData:
    capping_area: float
    hamiltonian_integral: float


def action_functional(data: CappedOrbitData) -> float:
    """A_H(x, u) = −∫u*ω + ∫H(x(t)) dt."""
    return -data.capping_area + data.hamiltonian_integral


# --- Ellipsoid ---

@dataclass(frozen=True)
class EllipsoidSpec:
    lambdas: tuple[float, ...]
    orbit_index: int

    def __post_init__(self):
        if not self.lambdas:
            raise InputError("ellipsoid needs at least one weight")
        if any(not lam > 0 for lam in self.lambdas):
            raise InputError(f"ellipsoid weights must be positive, got {list(self.lambdas)}")
        if not 1 <= self.orbit_index <= len(self.lambdas):
            raise InputError(f"orbit index {self.orbit_index} is not in 1..{len(self.lambdas)}")

    @property
    def half_dim(self) -> int:
        return len(self.lambdas)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.lambdas[self.orbit_index - 1]


@dataclass(frozen=True)
class EllipsoidReport:
    mu_numeric: float
    mu_closed_form: float
    period: float
    action: float
    mean_index: object

    def to_dict(self) -> dict:
        return {'mu_numeric': self.mu_numeric, 'mu_closed_form': self.mu_closed_form,
                'residual': abs(self.mu_numeric - self.mu_closed_form), 'period': self.period,
                'action': self.action, 'mean_index': self.mean_index.to_dict()}


def ellipsoid_hamiltonian(spec: EllipsoidSpec) -> QuadraticHamiltonian:
    """H = ½ Σ λ_l (x_l² + y_l²)."""
    weights = np.asarray(spec.lambdas, dtype=float)
    return QuadraticHamiltonian.from_matrix(np.diag(np.concatenate([weights, weights])))


def ellipsoid_closed_form(spec: EllipsoidSpec, periods: int = 1) -> float:
    """μ of the j-th principal orbit traversed `periods` times: 2·periods·Σ λ_l/λ_j."""
    lam_j = spec.lambdas[spec.orbit_index - 1]
    return 2.0 * periods * sum(lam / lam_j for lam in spec.lambdas)


def ellipsoid_capped_orbit(spec: EllipsoidSpec, periods: int = 1) -> CappedOrbitData:
    """The orbit in the x_j–y_j plane at H = 1 with its disk capping (orbit radius √(2/λ_j))."""
    return CappedOrbitData(capping_area=periods * spec.period, hamiltonian_integral=periods * spec.period)


def ellipsoid_orbit_index(spec: EllipsoidSpec, samples: int = None, periods: int = 1) -> EllipsoidReport:
    """The orbit index μ = −Δ(Ψ) of the j-th principal orbit, numerically and in closed form."""
    path = linearized_flow(ellipsoid_hamiltonian(spec), periods * spec.period, samples)
    report = mean_index(path)
    return EllipsoidReport(
        mu_numeric=-report.value,
        mu_closed_form=ellipsoid_closed_form(spec, periods),
        period=spec.period,
        action=action_functional(ellipsoid_capped_orbit(spec, periods)),
        mean_index=report,
    )


def ellipsoid_path(spec: EllipsoidSpec, samples: int = None, periods: int = 1) -> SymplecticPath:
    return linearized_flow(ellipsoid_hamiltonian(spec), periods * spec.period, samples)


@dataclass(frozen=True, eq=False)
class EllipsoidLoopCase:
    spec: EllipsoidSpec
    path: SymplecticPath
    loop: object
    holonomy: object


def ellipsoid_tangent_loop(spec: EllipsoidSpec, samples: int = None, periods: int = 1) -> EllipsoidLoopCase:
    """Tangent hyperplanes of the energy level along the j-th principal orbit, with the flow's quotient holonomy.

    C_t = T_{γ(t)}{H = 1} = (S·γ(t))^⊥ is coisotropic of codimension one and C_t^ω is spanned by the
    Hamiltonian vector field, so the linearized flow is itself a lift of the loop.
    """
    from sympidx.maslov import CoisotropicLoop, HolonomyPath, induced_holonomy

    path = ellipsoid_path(spec, samples, periods)
    hessian = ellipsoid_hamiltonian(spec).hessian
    n, j = spec.half_dim, spec.orbit_index - 1
    start = np.zeros(2 * n)
    start[j] = math.sqrt(2.0 / spec.lambdas[j])
    subspaces = [Subspace.from_basis(scipy.linalg.null_space((hessian @ psi @ start)[None, :]))
                 for psi in path.frames]
    loop = CoisotropicLoop.from_subspaces(path.times, subspaces, metadata={
        'source': 'ellipsoid', 'lambdas': list(spec.lambdas), 'orbit': spec.orbit_index, 'periods': periods})
    maps = induced_holonomy(loop, path)
    maps[0] = np.eye(loop.quotient_dim)
    holonomy = HolonomyPath.from_maps(path.times, maps, metadata={'source': 'ellipsoid'})
    return EllipsoidLoopCase(spec=spec, path=path, loop=loop, holonomy=holonomy)


# --- Flat coisotropic model ---

@dataclass(frozen=True, eq=False)
class FlatModelSpec:
    """ρ = ½ pᵀKp on B^k_r × T^k × ℝ^{2(n−k)}; the orbit has momentum p and leaf velocity Kp."""
    half_dim: int
    codim: int
    momentum: tuple[float, ...]
    radius: float = 1.0
    metric: np.ndarray | None = None
    capping_twist: int = 0

    def __post_init__(self):
        if not 1 <= self.codim <= self.half_dim:
            raise InputError(f"need 1 ≤ k ≤ n, got k={self.codim}, n={self.half_dim}")
        if len(self.momentum) != self.codim:
            raise InputError(f"momentum has {len(self.momentum)} entries, expected {self.codim}")
        if float(np.linalg.norm(self.momentum)) >= self.radius:
            raise InputError(f"momentum {list(self.momentum)} lies outside the ball of radius {self.radius}")
        if self.metric is not None:
            metric = np.asarray(self.metric, dtype=float)
            if metric.shape != (self.codim, self.codim) or not np.allclose(metric, metric.T):
                raise InputError(f"metric must be a symmetric {self.codim}×{self.codim} matrix")
            if float(np.min(np.linalg.eigvalsh(metric))) <= 0:
                raise InputError("metric must be positive definite")

    @property
    def metric_matrix(self) -> np.ndarray:
        return np.eye(self.codim) if self.metric is None else np.asarray(self.metric, dtype=float)

    @property
    def velocity(self) -> np.ndarray:
        return self.metric_matrix @ np.asarray(self.momentum, dtype=float)


@dataclass(frozen=True, eq=False)
class FlatModelCase:
    spec: FlatModelSpec
    period: float
    path: SymplecticPath
    loop: object
    holonomy: object


def orbit_period(spec: FlatModelSpec, max_denominator: int = None) -> float:
    """Smallest T > 0 with T·v ∈ ℤᵏ, for a leaf velocity v with rational entries."""
    max_denominator = get_int('max_denominator') if max_denominator is None else max_denominator
    fractions = []
    for entry in spec.velocity:
        approx = Fraction(float(entry)).limit_denominator(max_denominator)
        if abs(float(approx) - entry) > 1e-12 * max(1.0, abs(entry)):
            raise NonClosingOrbitError(
                f"leaf velocity entry {entry!r} is not rational with denominator ≤ {max_denominator}")
        if approx:
            fractions.append(approx)
    if not fractions:
        raise NonClosingOrbitError("leaf velocity is zero; the orbit is a rest point")
    denominators = math.lcm(*(f.denominator for f in fractions))
    numerators = math.gcd(*(abs(f.numerator) for f in fractions))
    return denominators / numerators


def flat_model_hessian(spec: FlatModelSpec, perturbation: np.ndarray = None) -> np.ndarray:
    """Hessian of ρ = ½ pᵀKp in the model ordering (q, a, p, b), optionally plus a perturbation."""
    n = spec.half_dim
    idx = frame_indices(n, spec.codim)
    hessian = np.zeros((2 * n, 2 * n))
    hessian[np.ix_(idx['p'], idx['p'])] = spec.metric_matrix
    if perturbation is not None:
        hessian = hessian + perturbation
    return hessian


def capping_twist_path(n: int, twist: int, times: np.ndarray) -> np.ndarray:
    """g(t) = rotation by 2π·twist·t in the (q₁, p₁) plane."""
    return np.array([plane_rotation(n, 0, 2 * math.pi * twist * t) for t in times])


def _twisted_flow(spec: FlatModelSpec, hessian: np.ndarray, samples: int) -> SymplecticPath:
    period = orbit_period(spec)
    flow = linearized_flow(QuadraticHamiltonian.from_matrix(hessian), period, samples)
    if not spec.capping_twist:
        return flow
    n, twist = spec.half_dim, spec.capping_twist

    def twist_at(t: float) -> np.ndarray:
        return plane_rotation(n, 0, 2 * math.pi * twist * t)

    twist_path = SymplecticPath.from_frames(flow.times, capping_twist_path(n, twist, flow.times),
                                            generator=twist_at, metadata={'capping_twist': twist})
    return pointwise_product(twist_path, flow)


def flat_leafwise_geodesic_path(spec: FlatModelSpec, samples: int = None) -> FlatModelCase:
    """Linearized flow of ρ along a closed leafwise geodesic, with the loop C_t and its holonomy."""
    from sympidx.maslov import CoisotropicLoop, HolonomyPath, induced_holonomy

    samples = get_int('default_samples') if samples is None else samples
    path = _twisted_flow(spec, flat_model_hessian(spec), samples)
    n, k = spec.half_dim, spec.codim
    model = np.eye(2 * n)[:, frame_indices(n, k)['coiso']]
    if spec.capping_twist:
        rotations = capping_twist_path(n, spec.capping_twist, path.times)
        subspaces = [Subspace.from_basis(g @ model) for g in rotations]
    else:
        subspaces = [Subspace.from_basis(model)] * len(path)
    loop = CoisotropicLoop.from_subspaces(path.times, subspaces, metadata={'source': 'flat_model'})
    holonomy = HolonomyPath.from_maps(path.times, induced_holonomy(loop, path))
    return FlatModelCase(spec=spec, period=orbit_period(spec), path=path, loop=loop, holonomy=holonomy)


def perturbed_flat_path(spec: FlatModelSpec, epsilon: float, direction: np.ndarray,
                        samples: int = None) -> SymplecticPath:
    """Flow of ρ + ε·½zᵀQz over the unperturbed period, with the same capping twist."""
    direction = np.asarray(direction, dtype=float)
    direction = (direction + direction.T) / 2
    scale = float(np.linalg.norm(direction, 2))
    if scale == 0:
        raise InputError("perturbation direction is zero")
    samples = get_int('default_samples') if samples is None else samples
    hessian = flat_model_hessian(spec, epsilon * direction / scale)
    return _twisted_flow(spec, hessian, samples)
