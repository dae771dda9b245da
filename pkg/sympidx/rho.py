"""The ρ-invariant Sp(2n) → S¹ built from eigenvalues and Krein signatures."""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from sympidx.config import get_float
from sympidx.errors import IllConditionedSpectrum, InputError
from sympidx.sympcore import SymplecticMatrix, standard_j, validate_symplectic

logger = logging.getLogger(__name__)

UNIT_CIRCLE = 'unit-circle'
NEGATIVE_REAL = 'negative-real'
POSITIVE_REAL = 'positive-real'
OFF_CIRCLE = 'off-circle-complex'
BOUNDARY = 'boundary'


@dataclass(frozen=True)
class EigenCluster:
    value: complex
    multiplicity: int
    tag: str


@dataclass(frozen=True)
class SpectralClassification:
    clusters: tuple[EigenCluster, ...]
    circle_tolerance: float
    negative_real_count: int
    krein_table: dict[complex, int] = field(default_factory=dict)
    quadruple_residual: float = 0.0

    @property
    def m0(self) -> int:
        return self.negative_real_count // 2

    @property
    def has_boundary(self) -> bool:
        return any(c.tag == BOUNDARY for c in self.clusters)

    def circle_clusters(self) -> list[EigenCluster]:
        """Unit-circle clusters in the open upper half-plane, away from ±1."""
        return [c for c in self.clusters if c.value in self.krein_table]

    def to_dict(self) -> dict:
        return {
            'clusters': [{'value': [c.value.real, c.value.imag], 'multiplicity': c.multiplicity, 'tag': c.tag}
                         for c in self.clusters],
            'circle_tolerance': self.circle_tolerance,
            'm0': self.m0,
            'krein_table': [{'value': [lam.real, lam.imag], 'positive': plus}
                            for lam, plus in self.krein_table.items()],
            'quadruple_residual': self.quadruple_residual,
        }


def _calibrate_krein_sign() -> int:
    """Sign s in K(v, v) = −i·s·vᴴJ₀v so that rotation R(θ), θ ∈ (0, π), is Krein-positive at e^{iθ}."""
    theta = np.pi / 3
    rotation = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    values, vectors = np.linalg.eig(rotation)
    v = vectors[:, int(np.argmax(values.imag))]
    form = (-1j * (v.conj() @ standard_j(1) @ v)).real
    return 1 if form > 0 else -1


KREIN_SIGN = _calibrate_krein_sign()


def _tag(value: complex, circle_tol: float) -> str:
    near_real = abs(value.imag) <= circle_tol * max(1.0, abs(value))
    if near_real and abs(value + 1) <= circle_tol:
        return BOUNDARY
    if near_real and value.real < 0:
        return NEGATIVE_REAL
    if abs(abs(value) - 1) <= circle_tol:
        return UNIT_CIRCLE
    if near_real:
        return POSITIVE_REAL
    return OFF_CIRCLE


def _cluster(values: np.ndarray, cluster_tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i in np.lexsort((values.imag, values.real)):
        for group in groups:
            anchor = values[group[0]]
            if abs(values[i] - anchor) <= cluster_tol * max(1.0, abs(anchor)):
                group.append(int(i))
                break
        else:
            groups.append([int(i)])
    return groups


def _krein_form(basis: np.ndarray) -> np.ndarray:
    j = standard_j(basis.shape[0] // 2)
    form = -1j * KREIN_SIGN * (basis.conj().T @ j @ basis)
    return (form + form.conj().T) / 2


def _positive_multiplicity(matrix: np.ndarray, vectors: np.ndarray,
                           group: list[int], centre: complex, radius: float) -> int:
    """Number of positive Krein form eigenvalues on the generalized eigenspace of a cluster."""
    if len(group) == 1:
        v = vectors[:, group[0]]
        basis = (v / np.linalg.norm(v))[:, None]
    else:
        _, z, sdim = scipy.linalg.schur(matrix.astype(complex), output='complex',
                                        sort=lambda w: abs(w - centre) <= radius)
        if sdim != len(group):
            raise IllConditionedSpectrum(
                f"invariant subspace at {centre:.6g} has dimension {sdim}, expected {len(group)}")
        basis = z[:, :sdim]
    eigen = np.linalg.eigvalsh(_krein_form(basis))
    krein_cond_tol = get_float('krein_cond_tol')
    scale = max(1.0, float(np.max(np.abs(eigen))))
    if float(np.min(np.abs(eigen))) <= krein_cond_tol * scale:
        raise IllConditionedSpectrum(
            f"Krein form at eigenvalue {centre:.6g} is numerically degenerate (min |eig| {np.min(np.abs(eigen)):.3g})")
    return int(np.sum(eigen > 0))


def _quadruple_residual(values: np.ndarray) -> float:
    """How far the computed spectrum is from being closed under λ ↦ 1/λ and λ ↦ λ̄."""
    if values.size == 0:
        return 0.0
    magnitude = np.abs(values)
    scale = np.maximum(1.0, np.maximum(magnitude, 1.0 / np.maximum(magnitude, 1e-300)))
    inverse_gap = np.min(np.abs(values[None, :] - (1.0 / values)[:, None]), axis=1)
    conjugate_gap = np.min(np.abs(values[None, :] - np.conj(values)[:, None]), axis=1)
    return float(np.max(np.maximum(inverse_gap, conjugate_gap) / scale))


def classify_spectrum(matrix, tol: float = None, trusted: bool = False) -> SpectralClassification:
    """Cluster eigenvalues, tag them, and compute Krein multiplicities for the upper circle clusters.

    `matrix` may be a SymplecticMatrix; `trusted=True` skips validation of frames certified by the caller.
    """
    circle_tol = get_float('circle_tol') if tol is None else tol
    cluster_tol = get_float('cluster_tol')
    if trusted and not isinstance(matrix, SymplecticMatrix):
        m = np.asarray(matrix, dtype=float)
    else:
        m = validate_symplectic(matrix).entries
    values, vectors = scipy.linalg.eig(m)
    residual = _quadruple_residual(values)
    if residual > np.sqrt(circle_tol):
        logger.debug("Spectrum closure residual %.3g", residual)

    clusters, krein_table, negatives = [], {}, 0
    for group in _cluster(values, cluster_tol):
        centre = complex(np.mean(values[group]))
        tag = _tag(centre, circle_tol)
        clusters.append(EigenCluster(value=centre, multiplicity=len(group), tag=tag))
        if tag in (NEGATIVE_REAL, BOUNDARY):
            negatives += len(group)
        elif tag == UNIT_CIRCLE and centre.imag > 0 and abs(centre - 1) > circle_tol:
            spread = max(abs(values[i] - centre) for i in group)
            radius = spread + cluster_tol * max(1.0, abs(centre))
            krein_table[centre] = _positive_multiplicity(m, vectors, group, centre, radius)

    if negatives % 2:
        raise IllConditionedSpectrum(f"odd number ({negatives}) of negative real eigenvalues")
    return SpectralClassification(
        clusters=tuple(clusters),
        circle_tolerance=circle_tol,
        negative_real_count=negatives,
        krein_table=krein_table,
        quadruple_residual=residual,
    )


def rho_from_classification(spectrum: SpectralClassification) -> complex:
    value = complex(-1.0 if spectrum.m0 % 2 else 1.0)
    for cluster in spectrum.circle_clusters():
        power = 2 * spectrum.krein_table[cluster.value] - cluster.multiplicity
        if power:
            value *= (cluster.value / abs(cluster.value)) ** power
    if spectrum.krein_table:
        value /= abs(value)
    return value


def compute_rho(matrix, tol: float = None, trusted: bool = False) -> complex:
    """ρ(M) ∈ S¹. Exactly ±1 when M has no eigenvalues on the unit circle away from ±1."""
    return rho_from_classification(classify_spectrum(matrix, tol, trusted))


def rho_phase(matrix, tol: float = None) -> float:
    return float(np.angle(compute_rho(matrix, tol)))


def krein_positive_multiplicity(matrix, eigenvalue: complex, tol: float = None) -> int:
    spectrum = classify_spectrum(matrix, tol)
    eigenvalue = complex(eigenvalue)
    if eigenvalue.imag < 0:
        eigenvalue = eigenvalue.conjugate()
    for cluster in spectrum.circle_clusters():
        if abs(cluster.value - eigenvalue) <= max(spectrum.circle_tolerance, 1e-6):
            return spectrum.krein_table[cluster.value]
    raise InputError(f"{eigenvalue:.6g} is not a unit-circle eigenvalue away from ±1")


def rho_determinant_oracle(matrix, tol: float = None) -> complex:
    """det(X + iY) for orthogonal symplectic M = [[X, −Y], [Y, X]]."""
    tol = get_float('symplectic_tol') if tol is None else tol
    m = validate_symplectic(matrix).entries
    deviation = float(np.max(np.abs(m.T @ m - np.eye(m.shape[0]))))
    if deviation > tol:
        raise InputError(f"matrix is not orthogonal (|MᵀM − I| = {deviation:.3g})")
    n = m.shape[0] // 2
    return complex(np.linalg.det(m[:n, :n] + 1j * m[n:, :n]))
