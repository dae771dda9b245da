"""Seeded random symplectic matrices, Hamiltonian generators, paths and coisotropic loops.

All randomness flows through numpy Generators built from (seed, stream) pairs, so a verification
case can be regenerated from its seed and case number alone.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from sympidx.errors import InputError
from sympidx.flows import one_parameter_path
from sympidx.indices import SymplecticPath, path_from_generator
from sympidx.maslov import CoisotropicLoop, HolonomyPath, induced_holonomy, model_coisotropic
from sympidx.sympcore import (
    Subspace, SymplecticMatrix, direct_sum, frame_indices, standard_j, symplectic_inverse, validate_symplectic,
)

FAMILIES = ('orthogonal', 'triangular', 'generic')
CERTIFY_TOL = 1e-10


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    if seed < 0:
        raise InputError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(stream))))


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else rng_for(int(seed))


def complex_to_real(u: np.ndarray) -> np.ndarray:
    """U = X + iY ∈ U(n) as [[X, −Y], [Y, X]] ∈ Sp(2n) ∩ O(2n)."""
    return np.block([[u.real, -u.imag], [u.imag, u.real]])


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_symmetric(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return scale * (a + a.T) / 2


def _dilation(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = a
    out[n:, n:] = np.linalg.inv(a).T
    return out


def _upper_shear(s: np.ndarray) -> np.ndarray:
    n = s.shape[0]
    return np.block([[np.eye(n), s], [np.zeros((n, n)), np.eye(n)]])


def random_symplectic(seed, n: int, family: str = 'generic', scale: float = 0.5) -> np.ndarray:
    """A random element of Sp(2n) from one of the families in FAMILIES."""
    if n < 1:
        raise InputError(f"half_dim must be at least 1, got {n}")
    rng = _rng(seed)
    if family == 'orthogonal':
        return complex_to_real(random_unitary(rng, n))
    if family == 'triangular':
        a = scipy.linalg.expm(scale * rng.standard_normal((n, n)))
        return _dilation(a) @ _upper_shear(random_symmetric(rng, n, scale))
    if family == 'generic':
        a = scipy.linalg.expm(scale * rng.standard_normal((n, n)))
        lower = _upper_shear(random_symmetric(rng, n, scale)).T
        return (complex_to_real(random_unitary(rng, n)) @ _dilation(a)
                @ _upper_shear(random_symmetric(rng, n, scale)) @ lower)
    raise InputError(f"unknown family '{family}', expected one of {', '.join(FAMILIES)}")


def random_symplectic_matrix(seed, n: int, family: str = 'generic', scale: float = 0.5) -> SymplecticMatrix:
    """random_symplectic certified at residual 1e-10."""
    return validate_symplectic(random_symplectic(seed, n, family, scale), CERTIFY_TOL)


# --- Spectral building blocks ---

def rotation_block(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def hyperbolic_block(stretch: float, negative: bool = False) -> np.ndarray:
    block = np.diag([math.exp(stretch), math.exp(-stretch)])
    return -block if negative else block


def loxodromic_block(stretch: float, angle: float) -> np.ndarray:
    """diag(Λ, Λ^{−T}) with Λ = e^s·R(φ): eigenvalues e^{±s±iφ}."""
    return _dilation(math.exp(stretch) * rotation_block(angle))


def direct_sum_all(blocks: list[np.ndarray]) -> np.ndarray:
    out = blocks[0]
    for block in blocks[1:]:
        out = direct_sum(out, block)
    return out


@dataclass(frozen=True)
class SpectralSample:
    """A conjugated direct sum of elementary blocks, with its expected ρ when known in closed form."""
    matrix: np.ndarray
    negative_blocks: int
    has_circle: bool


def random_spectral_symplectic(rng: np.random.Generator, n: int, circle: bool = True,
                               conjugate: bool = True) -> SpectralSample:
    """T·(⊕ rotation / hyperbolic / loxodromic blocks)·T⁻¹."""
    blocks, negatives, has_circle, remaining = [], 0, False, n
    while remaining:
        choices = ['hyperbolic', 'negative']
        if circle:
            choices.append('rotation')
        if remaining >= 2:
            choices.append('loxodromic')
        kind = choices[int(rng.integers(len(choices)))]
        if kind == 'rotation':
            blocks.append(rotation_block(float(rng.uniform(0.1, 2 * math.pi - 0.1))))
            has_circle = True
        elif kind == 'loxodromic':
            blocks.append(loxodromic_block(float(rng.uniform(0.2, 1.0)), float(rng.uniform(0.2, math.pi - 0.2))))
            remaining -= 1
        else:
            blocks.append(hyperbolic_block(float(rng.uniform(0.2, 1.0)), negative=kind == 'negative'))
            negatives += kind == 'negative'
        remaining -= 1
    matrix = direct_sum_all(blocks)
    if conjugate:
        t = random_symplectic(rng, n, 'generic', scale=0.3)
        matrix = t @ matrix @ symplectic_inverse(t)
    return SpectralSample(matrix=matrix, negative_blocks=negatives, has_circle=has_circle)


def random_hamiltonian_generator(rng: np.random.Generator, n: int, rate: float = 2 * math.pi,
                                 conjugate: bool = True) -> np.ndarray:
    """T·(⊕ elliptic / hyperbolic / loxodromic generators)·T⁻¹, a Hamiltonian matrix."""
    blocks, remaining = [], n
    while remaining:
        kind = int(rng.integers(3 if remaining >= 2 else 2))
        if kind == 0:
            blocks.append(float(rng.uniform(-rate, rate)) * standard_j(1))
        elif kind == 1:
            h = float(rng.uniform(0.1, 1.0))
            blocks.append(np.diag([h, -h]))
        else:
            lam = float(rng.uniform(-0.5, 0.5)) * np.eye(2) + float(rng.uniform(-rate, rate)) * standard_j(1)
            block = np.zeros((4, 4))
            block[:2, :2], block[2:, 2:] = lam, -lam.T
            blocks.append(block)
            remaining -= 1
        remaining -= 1
    generator = direct_sum_all(blocks)
    if conjugate:
        t = random_symplectic(rng, n, 'generic', scale=0.3)
        generator = t @ generator @ symplectic_inverse(t)
    return generator


def random_one_parameter_path(rng: np.random.Generator, n: int, samples: int,
                              rate: float = 2 * math.pi) -> SymplecticPath:
    return one_parameter_path(random_hamiltonian_generator(rng, n, rate), samples,
                              metadata={'source': 'random_one_parameter'})


def rotation_loop_generator(n: int, windings, conjugator: np.ndarray):
    """t ↦ T·(⊕ R(2π m_l t))·T⁻¹, a loop based at the identity."""
    t_inv = symplectic_inverse(conjugator)

    def frame_at(t: float) -> np.ndarray:
        blocks = [rotation_block(2 * math.pi * m * t) for m in windings]
        return conjugator @ direct_sum_all(blocks) @ t_inv

    return frame_at


def random_loop(rng: np.random.Generator, n: int, samples: int, max_winding: int = 2) -> SymplecticPath:
    windings = [int(w) for w in rng.integers(-max_winding, max_winding + 1, size=n)]
    conjugator = random_symplectic(rng, n, 'generic', scale=0.3)
    generator = rotation_loop_generator(n, windings, conjugator)
    return path_from_generator(generator, samples, metadata={'windings': windings})


def homotopy_perturbation(rng: np.random.Generator, n: int, epsilon: float):
    """t ↦ exp(ε·sin(πt)·X) for a random unit Hamiltonian matrix X; the identity at both ends."""
    x = -standard_j(n) @ random_symmetric(rng, 2 * n)
    x = x / np.linalg.norm(x, 2)

    def frame_at(t: float) -> np.ndarray:
        return scipy.linalg.expm(epsilon * math.sin(math.pi * t) * x)

    return frame_at


# --- Coisotropic loops ---

@dataclass(frozen=True, eq=False)
class CoisotropicCase:
    loop: CoisotropicLoop
    holonomy: HolonomyPath
    lift: SymplecticPath
    windings: tuple[int, ...]
    family: str


def stabilizer_generator(rng: np.random.Generator, n: int, k: int, rate: float = math.pi) -> np.ndarray:
    """A Hamiltonian matrix preserving the model coisotropic {p = 0}, in model coordinates."""
    idx = frame_indices(n, k)
    q, p, quotient = idx['q'], idx['p'], idx['quotient']
    out = np.zeros((2 * n, 2 * n))
    if k:
        x = 0.5 * rng.standard_normal((k, k))
        out[np.ix_(q, q)] = x
        out[np.ix_(p, p)] = -x.T
        out[np.ix_(q, p)] = random_symmetric(rng, k, 0.5)
    if n - k:
        out[np.ix_(quotient, quotient)] = random_hamiltonian_generator(rng, n - k, rate)
    if k and n - k:
        coupling = np.zeros((2 * n, 2 * n))
        w = 0.3 * rng.standard_normal((k, 2 * (n - k)))
        coupling[np.ix_(p, quotient)] = w
        coupling[np.ix_(quotient, p)] = w.T
        out = out - standard_j(n) @ coupling
    return out


def case_from_lift(times: np.ndarray, lift_at, model: np.ndarray, family: str, windings) -> CoisotropicCase:
    frames = [lift_at(t) for t in times]
    frames[0] = np.eye(model.shape[0])
    lift = SymplecticPath.from_frames(times, frames, generator=lift_at, metadata={'family': family})
    subspaces = [Subspace.from_basis(frame @ model) for frame in frames]
    loop = CoisotropicLoop.from_subspaces(times, subspaces, metadata={'family': family})
    holonomy = HolonomyPath.from_maps(times, induced_holonomy(loop, lift), metadata={'family': family})
    return CoisotropicCase(loop=loop, holonomy=holonomy, lift=lift, windings=tuple(windings), family=family)


@dataclass(frozen=True, eq=False)
class LiftDraw:
    """The sampled inputs of a coisotropic case: C_t = lift(t)·span(model)."""
    times: np.ndarray
    lift_at: Callable[[float], np.ndarray]
    model: np.ndarray
    windings: tuple[int, ...]
    family: str

    def to_document(self) -> dict:
        return {'family': self.family, 'windings': list(self.windings), 'model_basis': self.model.tolist(),
                'times': self.times.tolist(), 'lift_frames': [self.lift_at(t).tolist() for t in self.times]}


def draw_coisotropic_lift(rng: np.random.Generator, n: int, k: int, samples: int = 512,
                          family: str = 'twisted') -> LiftDraw:
    """A lift g_t·P_t of a loop C_t = g_t·C₀, P_t in the stabilizer of C₀.

    Families: 'twisted' (g a random multi-plane rotation loop), 'constant' (g = I),
    'half-turn' (g a half rotation in the (q₁, p₁) plane, a non-orientable loop when k ≥ 1).
    """
    if not 0 <= k <= n or n < 1:
        raise InputError(f"need n ≥ 1 and 0 ≤ k ≤ n, got n={n}, k={k}")
    basis_change = random_symplectic(rng, n, 'generic', scale=0.3)
    basis_inv = symplectic_inverse(basis_change)
    stabilizer = basis_change @ stabilizer_generator(rng, n, k) @ basis_inv
    model = basis_change @ model_coisotropic(n, k)
    times = np.linspace(0.0, 1.0, samples)

    if family == 'twisted':
        windings = [int(w) for w in rng.integers(-1, 2, size=n)]
        loop_at = rotation_loop_generator(n, windings, random_symplectic(rng, n, 'generic', scale=0.2))
    elif family == 'constant':
        windings = [0] * n

        def loop_at(t):
            return np.eye(2 * n)
    elif family == 'half-turn':
        if k < 1:
            raise InputError("a half-turn loop needs codim at least 1")
        windings = [0] * n

        def loop_at(t):
            out = np.eye(2 * n)
            c, s = math.cos(math.pi * t), math.sin(math.pi * t)
            out[0, 0], out[0, n], out[n, 0], out[n, n] = c, -s, s, c
            return basis_change @ out @ basis_inv
    else:
        raise InputError(f"unknown loop family '{family}'")

    def lift_at(t: float) -> np.ndarray:
        return loop_at(t) @ scipy.linalg.expm(t * stabilizer)

    return LiftDraw(times=times, lift_at=lift_at, model=model, windings=tuple(windings), family=family)


def random_coisotropic_case(rng: np.random.Generator, n: int, k: int, samples: int = 512,
                            family: str = 'twisted') -> CoisotropicCase:
    draw = draw_coisotropic_lift(rng, n, k, samples, family)
    return case_from_lift(draw.times, draw.lift_at, draw.model, draw.family, draw.windings)
