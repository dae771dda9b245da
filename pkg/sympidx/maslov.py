"""Maslov index of a loop of coisotropic subspaces with a given quotient holonomy.

μ(C, H) = −Δ(Ψ) for any lift Ψ of the pair: a path of symplectic matrices with Ψ(t)C₀ = C_t whose
induced action on the characteristic quotients is H_t. Non-orientable loops are handled through
their double cover, μ = μ(cover)/2.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from sympidx.config import get_float
from sympidx.errors import InputError, NotCoisotropicError, NumericalError
from sympidx.indices import IndexReport, RecapData, SymplecticPath, iterate_path, mean_index
from sympidx.sympcore import (
    Subspace, assemble_frame, detect_orientation, dual_completion, frame_coordinates, frame_indices,
    induced_action, is_coisotropic, same_span, split_frame, symplectic_complement,
    symplectic_inverse, symplectic_residual, transport_frames,
)

logger = logging.getLogger(__name__)

FRAME_TRANSPORT = 'frame-transport'
BLOCK_ASSEMBLY = 'block-assembly'
STRATEGIES = (FRAME_TRANSPORT, BLOCK_ASSEMBLY)

LIFT_RESIDUAL_TOL = 1e-7
WELL_DEFINED_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class CoisotropicLoop:
    half_dim: int
    codim: int
    times: np.ndarray
    subspaces: tuple[Subspace, ...]
    frames: np.ndarray
    oriented: bool
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_subspaces(cls, times, subspaces, oriented: bool = None, metadata: dict = None) -> 'CoisotropicLoop':
        """Validate a sampled loop and transport an adapted frame along it."""
        times = np.asarray(times, dtype=float)
        subspaces = tuple(s if isinstance(s, Subspace) else Subspace.from_basis(s) for s in subspaces)
        if times.ndim != 1 or times.size < 2 or times.size != len(subspaces):
            raise InputError(f"{len(subspaces)} subspaces for {times.size} sample times")
        if np.any(np.diff(times) <= 0):
            raise InputError(f"times not strictly increasing at index {int(np.argmax(np.diff(times) <= 0)) + 1}")
        if times[0] != 0.0 or times[-1] != 1.0:
            raise InputError("loop times must run from 0 to 1")
        n, dim = subspaces[0].half_dim, subspaces[0].dim
        for i, space in enumerate(subspaces):
            if space.half_dim != n or space.dim != dim:
                raise InputError(f"subspace {i} has dimension {space.dim} in ℝ^{2 * space.half_dim}, "
                                 f"expected {dim} in ℝ^{2 * n}")
            if not is_coisotropic(space):
                raise NotCoisotropicError(f"subspace {i} is not coisotropic")
        if not same_span(subspaces[0], subspaces[-1]):
            raise InputError("loop does not close: first and last subspaces differ")
        codim = 2 * n - dim
        frames = transport_frames(subspaces, codim)
        frames.flags.writeable = False
        detected = detect_orientation(frames, codim)
        if oriented is not None and bool(oriented) != detected:
            raise InputError(f"loop declared {'orientable' if oriented else 'non-orientable'} "
                             f"but transported orientation {'returns' if detected else 'reverses'}")
        times.flags.writeable = False
        return cls(half_dim=n, codim=codim, times=times, subspaces=subspaces, frames=frames,
                   oriented=detected, metadata=dict(metadata or {}))

    @property
    def quotient_dim(self) -> int:
        return 2 * (self.half_dim - self.codim)

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True, eq=False)
class HolonomyPath:
    """Symplectic maps H_t: C₀/C₀^ω → C_t/C_t^ω in the loop's adapted quotient frames, H₀ = I."""
    times: np.ndarray
    maps: np.ndarray
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_maps(cls, times, maps, metadata: dict = None, tol: float = None) -> 'HolonomyPath':
        tol = get_float('symplectic_tol') if tol is None else tol
        times = np.asarray(times, dtype=float)
        maps = np.asarray(maps, dtype=float)
        if maps.ndim != 3 or maps.shape[0] != times.size or maps.shape[1] != maps.shape[2] or maps.shape[1] % 2:
            raise InputError(f"holonomy maps must have shape ({times.size}, 2m, 2m), got {maps.shape}")
        if maps.shape[1]:
            deviation = float(np.max(np.abs(maps[0] - np.eye(maps.shape[1]))))
            if deviation > get_float('frame_identity_tol') ** 0.5:
                raise InputError(f"holonomy at t=0 is not the identity (deviation {deviation:.3g})")
            for i, h in enumerate(maps):
                residual = symplectic_residual(h)
                if residual > tol:
                    raise InputError(f"holonomy map {i} is not symplectic (residual {residual:.3g})")
        times.flags.writeable = False
        maps.flags.writeable = False
        return cls(times=times, maps=maps, metadata=dict(metadata or {}))

    @property
    def quotient_dim(self) -> int:
        return self.maps.shape[1]


@dataclass(frozen=True)
class WellDefinednessReport:
    frame_transport: IndexReport
    block_assembly: IndexReport

    @property
    def difference(self) -> float:
        return abs(self.frame_transport.value - self.block_assembly.value)

    @property
    def passed(self) -> bool:
        return self.difference <= WELL_DEFINED_TOL

    def to_dict(self) -> dict:
        return {'frame_transport': self.frame_transport.to_dict(),
                'block_assembly': self.block_assembly.to_dict(),
                'difference': self.difference, 'passed': self.passed}


def _check_compatible(loop: CoisotropicLoop, holonomy: HolonomyPath) -> None:
    if holonomy.times.shape != loop.times.shape or not np.allclose(holonomy.times, loop.times, rtol=0, atol=1e-12):
        raise InputError("holonomy and loop are sampled at different times")
    if holonomy.quotient_dim != loop.quotient_dim:
        raise InputError(f"holonomy acts on a {holonomy.quotient_dim}-dimensional quotient, "
                         f"loop quotient has dimension {loop.quotient_dim}")


def embed_quotient(n: int, k: int, block: np.ndarray) -> np.ndarray:
    """Identity on (q, p), `block` on the quotient coordinates (a, b)."""
    out = np.eye(2 * n)
    quotient = frame_indices(n, k)['quotient']
    out[np.ix_(quotient, quotient)] = block
    return out


def block_assembly_frames(loop: CoisotropicLoop) -> np.ndarray:
    """Frames [E, Q_a, Y, Q_b] with E carried by orthonormalized projection and Y the canonical completion."""
    k = loop.codim
    frames = [loop.frames[0]]
    null = split_frame(loop.frames[0], k)[0]
    for space, reference in zip(loop.subspaces[1:], loop.frames[1:]):
        complement = symplectic_complement(space).basis
        null = complement @ (complement.T @ null)
        if k:
            u, _, vt = np.linalg.svd(null, full_matrices=False)
            null = u @ vt
        _, quot_a, _, quot_b = split_frame(reference, k)
        transversal = dual_completion(null, np.hstack([quot_a, quot_b]))
        frames.append(assemble_frame(null, quot_a, transversal, quot_b))
    return np.array(frames)


def lift_residuals(loop: CoisotropicLoop, holonomy: HolonomyPath, frames: np.ndarray) -> tuple[float, float]:
    """(span residual, quotient residual) of a candidate lift in the loop's adapted coordinates."""
    idx = frame_indices(loop.half_dim, loop.codim)
    span, quotient = 0.0, 0.0
    for frame_t, psi, h in zip(loop.frames, frames, holonomy.maps):
        coords = frame_coordinates(frame_t, psi, loop.frames[0])
        scale = max(1.0, float(np.max(np.abs(coords))))
        span = max(span, float(np.max(np.abs(coords[np.ix_(idx['p'], idx['coiso'])]), initial=0.0)) / scale)
        action = coords[np.ix_(idx['quotient'], idx['quotient'])]
        quotient = max(quotient, float(np.max(np.abs(action - h), initial=0.0)) / scale)
    return span, quotient


def build_lift(loop: CoisotropicLoop, holonomy: HolonomyPath, strategy: str = FRAME_TRANSPORT) -> SymplecticPath:
    """Ψ_t = G_t·B_t·G₀⁻¹ with B_t the holonomy embedded on the quotient coordinates."""
    _check_compatible(loop, holonomy)
    if strategy == FRAME_TRANSPORT:
        frames = loop.frames
    elif strategy == BLOCK_ASSEMBLY:
        frames = block_assembly_frames(loop)
    else:
        raise InputError(f"unknown lift strategy '{strategy}', expected one of {', '.join(STRATEGIES)}")
    n, k = loop.half_dim, loop.codim
    base_inv = symplectic_inverse(frames[0])
    lift = np.array([g @ embed_quotient(n, k, h) @ base_inv for g, h in zip(frames, holonomy.maps)])
    lift[0] = np.eye(2 * n)
    span, quotient = lift_residuals(loop, holonomy, lift)
    if max(span, quotient) > LIFT_RESIDUAL_TOL:
        raise NumericalError(f"{strategy} lift misses its constraints (span {span:.3g}, quotient {quotient:.3g})")
    logger.debug("%s lift residuals: span %.3g, quotient %.3g", strategy, span, quotient)
    return SymplecticPath.from_frames(loop.times, lift, metadata={'strategy': strategy})


def induced_holonomy(loop: CoisotropicLoop, path: SymplecticPath) -> np.ndarray:
    """The quotient action of a lift, in the loop's adapted frames."""
    if len(path) != len(loop):
        raise InputError(f"path has {len(path)} samples, loop has {len(loop)}")
    return np.array([induced_action(frame_t, psi, loop.frames[0], loop.codim)
                     for frame_t, psi in zip(loop.frames, path.frames)])


def homogeneity_cover(loop: CoisotropicLoop, holonomy: HolonomyPath, k: int) -> tuple[CoisotropicLoop, HolonomyPath]:
    """The k-fold traversal of the loop with the holonomy of the iterated lift."""
    if k < 1:
        raise InputError(f"cover degree must be positive, got {k}")
    if k == 1:
        return loop, holonomy
    lift = iterate_path(build_lift(loop, holonomy), k)
    subspaces = list(loop.subspaces)
    for _ in range(k - 1):
        subspaces.extend(loop.subspaces[1:])
    cover = CoisotropicLoop.from_subspaces(lift.times, subspaces, metadata={**loop.metadata, 'cover': k})
    maps = induced_holonomy(cover, lift)
    if cover.quotient_dim:
        maps[0] = np.eye(cover.quotient_dim)
    return cover, HolonomyPath.from_maps(lift.times, maps, metadata={'cover': k})


def maslov_index(loop: CoisotropicLoop, holonomy: HolonomyPath, strategy: str = FRAME_TRANSPORT,
                 lift: SymplecticPath = None) -> IndexReport:
    """μ(C, H) = −Δ(lift); halved from the double cover when the loop is non-orientable.

    `lift` reuses a path already built by build_lift for this strategy; it is ignored for
    non-orientable loops, whose lift lives on the double cover.
    """
    if not loop.oriented:
        cover, cover_holonomy = homogeneity_cover(loop, holonomy, 2)
        if not cover.oriented:
            raise NumericalError("double cover of a non-orientable loop is still non-orientable")
        report = maslov_index(cover, cover_holonomy, strategy)
        return IndexReport(value=report.value / 2, max_phase_step=report.max_phase_step,
                           refinement_depth=report.refinement_depth)
    if lift is None:
        lift = build_lift(loop, holonomy, strategy)
    report = mean_index(lift)
    return IndexReport(value=-report.value, max_phase_step=report.max_phase_step,
                       refinement_depth=report.refinement_depth)


def well_definedness_check(loop: CoisotropicLoop, holonomy: HolonomyPath) -> WellDefinednessReport:
    return WellDefinednessReport(
        frame_transport=maslov_index(loop, holonomy, FRAME_TRANSPORT),
        block_assembly=maslov_index(loop, holonomy, BLOCK_ASSEMBLY),
    )


def recap_maslov(mu: float, recap: RecapData) -> float:
    """Changing the capping by a sphere A shifts μ by 2⟨c₁, A⟩."""
    return mu + 2 * recap.c1_pairing


def model_coisotropic(n: int, k: int) -> np.ndarray:
    """Basis of {p = 0} in ℝ^{2n}: columns q, a, b."""
    return np.eye(2 * n)[:, frame_indices(n, k)['coiso']]


def constant_loop(space: Subspace, samples: int) -> CoisotropicLoop:
    times = np.linspace(0.0, 1.0, samples)
    return CoisotropicLoop.from_subspaces(times, [space] * samples, metadata={'source': 'constant'})
