"""Linear symplectic algebra on (ℝ^{2n}, ω₀): forms, validation, complements, adapted frames.

Coordinates are (x, y) ∈ ℝⁿ × ℝⁿ and ω₀(u, v) = uᵀJ₀v with J₀ = [[0, −I], [I, 0]].

Adapted frames order their columns as (q, a, p, b) in the (x, y) layout:
    x-block = [C^ω basis (q) | quotient reps (a)]
    y-block = [transversal (p) | quotient reps (b)]
so that the frame maps the model coisotropic {p = 0} onto C and {q} onto C^ω.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg

from sympidx.config import get_float
from sympidx.errors import (
    InputError, NotCoisotropicError, NotSymplecticError, NumericalError, RefinementRequired,
)

if TYPE_CHECKING:
    from sympidx.maslov import CoisotropicLoop

logger = logging.getLogger(__name__)


def standard_j(n: int) -> np.ndarray:
    zero, eye = np.zeros((n, n)), np.eye(n)
    return np.block([[zero, -eye], [eye, zero]])


@dataclass(frozen=True, eq=False)
class SymplecticForm:
    half_dim: int
    matrix_rep: np.ndarray


def standard_form(n: int) -> SymplecticForm:
    if n < 1:
        raise InputError(f"half_dim must be at least 1, got {n}")
    rep = standard_j(n)
    rep.flags.writeable = False
    return SymplecticForm(half_dim=n, matrix_rep=rep)


def omega(u, v, form: SymplecticForm = None) -> float:
    """ω₀(u, v) = uᵀJ₀v."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.ndim != 1 or u.shape != v.shape or u.size % 2 or u.size == 0:
        raise InputError(f"omega needs two vectors of the same even length, got {u.shape} and {v.shape}")
    form = form or standard_form(u.size // 2)
    if u.size != 2 * form.half_dim:
        raise InputError(f"vectors have length {u.size}, form expects {2 * form.half_dim}")
    return float(u @ form.matrix_rep @ v)


# --- Symplectic matrices ---

def _square_even(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2 or m.shape[0] == 0:
        raise InputError(f"expected a square matrix of even size, got shape {m.shape}")
    return m


def symplectic_residual(matrix) -> float:
    """‖MᵀJ₀M − J₀‖ as the largest absolute entry."""
    m = _square_even(matrix)
    j = standard_j(m.shape[0] // 2)
    return float(np.max(np.abs(m.T @ j @ m - j)))


def check_symplectic(matrix, tol: float = None) -> tuple[bool, float]:
    """Returns (ok, residual)."""
    tol = get_float('symplectic_tol') if tol is None else tol
    residual = symplectic_residual(matrix)
    return residual <= tol, residual


@dataclass(frozen=True, eq=False)
class SymplecticMatrix:
    half_dim: int
    entries: np.ndarray
    tolerance: float
    residual: float


def validate_symplectic(matrix, tol: float = None) -> SymplecticMatrix:
    """Certify M as symplectic within tol, or raise NotSymplecticError carrying the residual."""
    tol = get_float('symplectic_tol') if tol is None else tol
    if isinstance(matrix, SymplecticMatrix):
        if matrix.tolerance <= tol:
            return matrix
        matrix = matrix.entries
    m = _square_even(matrix)
    ok, residual = check_symplectic(m, tol)
    if not ok:
        raise NotSymplecticError(
            f"matrix is not symplectic: residual {residual:.3g} exceeds {tol:.3g}", residual)
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0 or abs(logdet) > np.sqrt(tol):
        raise NotSymplecticError(
            f"determinant {sign * np.exp(logdet):.6g} is not +1", residual)
    entries = m.copy()
    entries.flags.writeable = False
    return SymplecticMatrix(half_dim=m.shape[0] // 2, entries=entries, tolerance=tol, residual=residual)


def symplectic_inverse(matrix: np.ndarray) -> np.ndarray:
    """M⁻¹ = J₀⁻¹MᵀJ₀ for symplectic M."""
    j = standard_j(matrix.shape[0] // 2)
    return -j @ matrix.T @ j


def symplectic_polar_correction(columns: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float]:
    """Nearest fix M ↦ M·(J_t⁻¹MᵀJ₀M)^{-1/2} so that the columns carry the form `target`.

    Returns the corrected columns and ‖correction − I‖₂.
    """
    if columns.shape[1] == 0:
        return columns, 0.0
    j = standard_j(columns.shape[0] // 2)
    gram = columns.T @ j @ columns
    x = target.T @ gram
    root = scipy.linalg.sqrtm(x)
    correction = np.real(np.linalg.inv(root))
    drift = float(np.linalg.norm(correction - np.eye(correction.shape[0]), 2))
    return columns @ correction, drift


def resymplectify(matrix: np.ndarray) -> np.ndarray:
    m = _square_even(matrix)
    corrected, _ = symplectic_polar_correction(m, standard_j(m.shape[0] // 2))
    return corrected


def direct_sum(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """φ₁ ⊕ φ₂ on ℝ^{2n₁} × ℝ^{2n₂}, laid out as (x₁, x₂, y₁, y₂)."""
    n1, n2 = first.shape[0] // 2, second.shape[0] // 2
    n = n1 + n2
    idx1 = np.r_[0:n1, n:n + n1]
    idx2 = np.r_[n1:n, n + n1:2 * n]
    out = np.zeros((2 * n, 2 * n), dtype=np.result_type(first, second))
    out[np.ix_(idx1, idx1)] = first
    out[np.ix_(idx2, idx2)] = second
    return out


def plane_rotation(n: int, plane: int, angle: float) -> np.ndarray:
    """Rotation by `angle` in the (x_plane, y_plane) coordinate plane, identity elsewhere."""
    out = np.eye(2 * n)
    c, s = np.cos(angle), np.sin(angle)
    out[plane, plane], out[plane, n + plane] = c, -s
    out[n + plane, plane], out[n + plane, n + plane] = s, c
    return out


# --- Subspaces ---

@dataclass(frozen=True, eq=False)
class Subspace:
    half_dim: int
    basis: np.ndarray

    @classmethod
    def from_basis(cls, basis, rank_tol: float = None) -> 'Subspace':
        rank_tol = get_float('rank_tol') if rank_tol is None else rank_tol
        b = np.asarray(basis, dtype=float)
        if b.ndim != 2 or b.shape[0] % 2 or b.shape[0] == 0:
            raise InputError(f"subspace basis must be a 2n×d matrix, got shape {b.shape}")
        if b.shape[1] > b.shape[0]:
            raise InputError(f"{b.shape[1]} basis vectors cannot be independent in ℝ^{b.shape[0]}")
        if b.shape[1]:
            s = np.linalg.svd(b, compute_uv=False)
            if s[-1] <= rank_tol * max(1.0, s[0]):
                raise InputError(f"basis columns are linearly dependent (smallest singular value {s[-1]:.3g})")
        b = b.copy()
        b.flags.writeable = False
        return cls(half_dim=b.shape[0] // 2, basis=b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def orthonormal(self) -> np.ndarray:
        if self.dim == 0:
            return self.basis
        q, _ = np.linalg.qr(self.basis)
        return q


def principal_angles(first: Subspace, second: Subspace) -> np.ndarray:
    if first.dim == 0 or second.dim == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(first.basis, second.basis)


def containment_residual(space: Subspace, vectors: np.ndarray) -> float:
    """Largest sine of the angle between span(vectors) and `space`."""
    if vectors.shape[1] == 0:
        return 0.0
    if space.dim == 0:
        return 1.0
    q_space = space.orthonormal()
    q_vec, _ = np.linalg.qr(vectors)
    return float(np.linalg.norm(q_vec - q_space @ (q_space.T @ q_vec), 2))


def contains(space: Subspace, other: Subspace, tol: float = None) -> bool:
    tol = get_float('angle_tol') if tol is None else tol
    return other.dim <= space.dim and containment_residual(space, other.basis) <= tol


def same_span(first: Subspace, second: Subspace, tol: float = None) -> bool:
    tol = get_float('angle_tol') if tol is None else tol
    if first.dim != second.dim:
        return False
    return first.dim == 0 or float(np.max(principal_angles(first, second))) <= tol


def symplectic_complement(space: Subspace, rank_tol: float = None) -> Subspace:
    """C^ω = {v : ω₀(c, v) = 0 for all c ∈ C}, returned with an orthonormal basis."""
    rank_tol = get_float('rank_tol') if rank_tol is None else rank_tol
    n = space.half_dim
    if space.dim == 0:
        return Subspace(half_dim=n, basis=np.eye(2 * n))
    pairing = space.basis.T @ standard_j(n)
    null = scipy.linalg.null_space(pairing, rcond=rank_tol)
    if null.shape[1] != 2 * n - space.dim:
        raise NumericalError(
            f"symplectic complement has dimension {null.shape[1]}, expected {2 * n - space.dim}")
    return Subspace(half_dim=n, basis=null)


def is_coisotropic(space: Subspace, tol: float = None) -> bool:
    tol = get_float('angle_tol') if tol is None else tol
    if space.dim < space.half_dim:
        return False
    complement = symplectic_complement(space)
    return containment_residual(space, complement.basis) <= tol


@dataclass(frozen=True, eq=False)
class CharacteristicQuotient:
    representative_basis: np.ndarray
    induced_form: np.ndarray
    null_basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.representative_basis.shape[1]


def characteristic_quotient(space: Subspace, rank_tol: float = None) -> CharacteristicQuotient:
    """C/C^ω, represented by the Euclidean complement of C^ω inside C."""
    rank_tol = get_float('rank_tol') if rank_tol is None else rank_tol
    if not is_coisotropic(space):
        raise NotCoisotropicError(f"subspace of dimension {space.dim} is not coisotropic")
    null = symplectic_complement(space).basis
    q_space = space.orthonormal()
    residue = q_space - null @ (null.T @ q_space)
    quotient_dim = space.dim - null.shape[1]
    if quotient_dim:
        u, s, _ = np.linalg.svd(residue, full_matrices=False)
        reps = u[:, :quotient_dim]
    else:
        reps = np.zeros((space.basis.shape[0], 0))
    form = reps.T @ standard_j(space.half_dim) @ reps
    if quotient_dim:
        smallest = np.linalg.svd(form, compute_uv=False)[-1]
        if smallest <= rank_tol:
            raise NumericalError(f"induced form on C/C^ω is degenerate (smallest singular value {smallest:.3g})")
    return CharacteristicQuotient(representative_basis=reps, induced_form=form, null_basis=null)


# --- Adapted frames ---

def frame_indices(n: int, k: int) -> dict[str, np.ndarray]:
    """Column positions of the q, a, p, b blocks and the model coisotropic {p = 0}."""
    q = np.arange(0, k)
    a = np.arange(k, n)
    p = np.arange(n, n + k)
    b = np.arange(n + k, 2 * n)
    return {'q': q, 'a': a, 'p': p, 'b': b,
            'quotient': np.r_[a, b], 'coiso': np.r_[q, a, b]}


def symplectic_gram_schmidt(vectors: np.ndarray, rank_tol: float = None) -> tuple[np.ndarray, np.ndarray]:
    """Split a basis of a symplectic subspace into (A, B) with ω₀(A_i, B_j) = −δ_ij."""
    rank_tol = get_float('rank_tol') if rank_tol is None else rank_tol
    j = standard_j(vectors.shape[0] // 2)
    pool = [vectors[:, i] for i in range(vectors.shape[1])]
    first, second = [], []
    while pool:
        a = pool.pop(0)
        pairings = np.array([a @ j @ v for v in pool])
        if not pool or np.max(np.abs(pairings)) <= rank_tol:
            raise NumericalError("vectors do not span a symplectic subspace")
        pick = int(np.argmax(np.abs(pairings)))
        b = -pool.pop(pick) / pairings[pick]
        scale = np.sqrt(np.linalg.norm(b) / np.linalg.norm(a))
        a, b = a * scale, b / scale
        pool = [v + (v @ j @ b) * a - (v @ j @ a) * b for v in pool]
        first.append(a)
        second.append(b)
    return np.column_stack(first), np.column_stack(second)


def dual_completion(null: np.ndarray, quotient: np.ndarray, seed: np.ndarray = None) -> np.ndarray:
    """The transversal block Y with ω₀(null, Y) = −I, ω₀(quotient, Y) = 0, ω₀(Y, Y) = 0.

    Without a seed, Y starts from J₀·null, which is Euclidean-orthogonal to C.
    """
    k = null.shape[1]
    if k == 0:
        return np.zeros((null.shape[0], 0))
    j = standard_j(null.shape[0] // 2)
    if seed is None:
        y = j @ null @ np.linalg.inv(null.T @ null)
    else:
        y = seed @ np.linalg.inv(-(null.T @ j @ seed))
    if quotient.shape[1]:
        y = y - quotient @ np.linalg.solve(quotient.T @ j @ quotient, quotient.T @ j @ y)
    w = y.T @ j @ y
    return y - null @ (w / 2)


def assemble_frame(null, quot_a, transversal, quot_b) -> np.ndarray:
    return np.hstack([null, quot_a, transversal, quot_b])


def split_frame(frame: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    idx = frame_indices(frame.shape[0] // 2, k)
    return frame[:, idx['q']], frame[:, idx['a']], frame[:, idx['p']], frame[:, idx['b']]


def adapted_frame(space: Subspace) -> np.ndarray:
    """Canonical symplectic frame adapted to a coisotropic subspace."""
    quotient = characteristic_quotient(space)
    null = quotient.null_basis
    if quotient.dim:
        quot_a, quot_b = symplectic_gram_schmidt(quotient.representative_basis)
    else:
        quot_a = quot_b = np.zeros((null.shape[0], 0))
    transversal = dual_completion(null, np.hstack([quot_a, quot_b]))
    return assemble_frame(null, quot_a, transversal, quot_b)


def transport_frame(previous: np.ndarray, space: Subspace, codim: int) -> tuple[np.ndarray, float]:
    """Carry a frame onto the decomposition of a nearby coisotropic subspace.

    The null block is projected onto the new C^ω and re-orthonormalized, the quotient block is
    projected into C off the new null block and re-symplectified by the polar-type correction,
    and the transversal block is projected onto the Euclidean complement C^⊥ = J₀C^ω before dual
    completion. Returns the new frame and the size of the quotient correction.
    """
    n = space.half_dim
    m = n - codim
    null_prev, a_prev, y_prev, b_prev = split_frame(previous, codim)
    null_space = symplectic_complement(space).basis
    null = null_space @ (null_space.T @ null_prev)
    if codim:
        u, _, vt = np.linalg.svd(null, full_matrices=False)
        null = u @ vt
    q_space = space.orthonormal()
    quotient = q_space @ (q_space.T @ np.hstack([a_prev, b_prev]))
    quotient = quotient - null @ (null.T @ quotient)
    quotient, drift = symplectic_polar_correction(quotient, standard_j(m))
    quot_a, quot_b = quotient[:, :m], quotient[:, m:]
    seed = y_prev - q_space @ (q_space.T @ y_prev)
    transversal = dual_completion(null, quotient, seed=seed)
    return assemble_frame(null, quot_a, transversal, quot_b), drift


def transport_frames(subspaces, codim: int, gauge: float = None, step_gauge: float = None) -> np.ndarray:
    gauge = get_float('continuity_gauge') if gauge is None else gauge
    step_gauge = get_float('frame_step_gauge') if step_gauge is None else step_gauge
    frames = [adapted_frame(subspaces[0])]
    for i in range(1, len(subspaces)):
        angles = principal_angles(subspaces[i - 1], subspaces[i])
        angle = float(np.max(angles)) if angles.size else 0.0
        if angle > gauge:
            raise RefinementRequired(
                f"loop samples {i - 1} and {i} are {angle:.3g} rad apart (gauge {gauge:.3g}); "
                "sample the loop more densely")
        frame, drift = transport_frame(frames[-1], subspaces[i], codim)
        prev = frames[-1]
        step = float(np.linalg.norm(frame - prev, 2)) / max(1.0, float(np.linalg.norm(prev, 2)))
        if step > step_gauge or drift > step_gauge:
            raise RefinementRequired(
                f"frame step {max(step, drift):.3g} between samples {i - 1} and {i} exceeds gauge {step_gauge:.3g}")
        frames.append(frame)
    return np.array(frames)


def adapted_frame_family(loop: 'CoisotropicLoop') -> np.ndarray:
    """Continuous symplectic frames adapted to every sample of a coisotropic loop."""
    return transport_frames(loop.subspaces, loop.codim)


def frame_coordinates(frame_t: np.ndarray, matrix: np.ndarray, frame_0: np.ndarray) -> np.ndarray:
    """The matrix expressed from frame_0 coordinates to frame_t coordinates."""
    return symplectic_inverse(frame_t) @ matrix @ frame_0


def induced_action(frame_t: np.ndarray, matrix: np.ndarray, frame_0: np.ndarray, codim: int) -> np.ndarray:
    """Action of a lift on C₀/C₀^ω → C_t/C_t^ω in the adapted quotient frames."""
    idx = frame_indices(frame_t.shape[0] // 2, codim)
    coords = frame_coordinates(frame_t, matrix, frame_0)
    return coords[np.ix_(idx['quotient'], idx['quotient'])]


def detect_orientation(frames: np.ndarray, codim: int) -> bool:
    """Whether orientation of C, transported along the frames, returns to itself."""
    idx = frame_indices(frames.shape[1] // 2, codim)
    start = frames[0][:, idx['coiso']]
    end = frames[-1][:, idx['coiso']]
    coefficients, *_ = np.linalg.lstsq(start, end, rcond=None)
    return bool(np.linalg.det(coefficients) > 0)
