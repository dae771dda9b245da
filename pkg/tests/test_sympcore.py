"""Tests for the linear symplectic algebra layer."""

import sys
import os
import math

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis.strategies import floats, lists

from sympidx.errors import InputError, NotCoisotropicError, NotSymplecticError, RefinementRequired
from sympidx.maslov import CoisotropicLoop, constant_loop, model_coisotropic
from sympidx.sampling import random_symplectic, rng_for
from sympidx.sympcore import (
    Subspace, adapted_frame, characteristic_quotient, check_symplectic, contains, direct_sum, frame_indices,
    is_coisotropic, omega, plane_rotation, resymplectify, same_span, standard_form, standard_j,
    symplectic_complement, symplectic_inverse, symplectic_residual, transport_frames, validate_symplectic,
)


def _line(angle: float) -> Subspace:
    return Subspace.from_basis(np.array([[math.cos(angle)], [math.sin(angle)]]))


def test_standard_form():
    form = standard_form(2)
    j = form.matrix_rep
    assert np.array_equal(j, -j.T)
    assert np.array_equal(j @ j, -np.eye(4))
    with pytest.raises(InputError):
        standard_form(0)


def test_omega_basis_pair():
    e = np.eye(4)
    assert omega(e[0], e[2]) == -1.0
    assert omega(e[2], e[0]) == 1.0
    assert omega(e[0], e[1]) == 0.0


def test_omega_dimension_mismatch():
    with pytest.raises(InputError):
        omega([1.0, 0.0], [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(InputError):
        omega([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(lists(floats(-10, 10), min_size=4, max_size=4), lists(floats(-10, 10), min_size=4, max_size=4))
def test_omega_antisymmetric(u, v):
    assert math.isclose(omega(u, u), 0.0, abs_tol=1e-9)
    assert math.isclose(omega(u, v), -omega(v, u), abs_tol=1e-9)


def test_validate_identity_and_dilation():
    assert validate_symplectic(np.eye(4), 1e-12).residual == 0.0
    certified = validate_symplectic(np.diag([2.0, 0.5]))
    assert certified.half_dim == 1
    assert not certified.entries.flags.writeable


def test_validate_rejects_with_residual():
    with pytest.raises(NotSymplecticError) as exc:
        validate_symplectic(np.diag([2.0, 2.0]))
    assert exc.value.residual == pytest.approx(3.0)
    assert exc.value.exit_code == 2


def test_validate_rejects_odd_shape():
    with pytest.raises(InputError):
        validate_symplectic(np.eye(3))


def test_symplectic_inverse_and_direct_sum():
    m = random_symplectic(rng_for(1), 2)
    assert np.allclose(symplectic_inverse(m) @ m, np.eye(4), atol=1e-10)
    total = direct_sum(m, np.diag([3.0, 1 / 3]))
    ok, residual = check_symplectic(total)
    assert ok and residual < 1e-10
    assert total.shape == (6, 6)


def test_resymplectify_restores_small_drift():
    m = random_symplectic(rng_for(2), 2, 'generic', scale=0.3)
    drifted = m + 1e-6 * rng_for(3).standard_normal(m.shape)
    assert symplectic_residual(drifted) > 1e-8
    assert symplectic_residual(resymplectify(drifted)) < 1e-10


def test_complement_of_full_space_and_lagrangian():
    full = Subspace.from_basis(np.eye(4))
    assert symplectic_complement(full).dim == 0
    lagrangian = Subspace.from_basis(np.eye(6)[:, :3])
    assert same_span(symplectic_complement(lagrangian), lagrangian)


def test_complement_of_hyperplane_is_inside():
    space = Subspace.from_basis(np.eye(4)[:, :3])
    complement = symplectic_complement(space)
    assert complement.dim == 1
    assert contains(space, complement)
    assert is_coisotropic(space)


def test_double_complement():
    t = random_symplectic(rng_for(4), 3)
    space = Subspace.from_basis(t @ np.eye(6)[:, [0, 2, 3, 4]])
    back = symplectic_complement(symplectic_complement(space))
    assert same_span(back, space, 1e-8)


def test_is_coisotropic():
    e = np.eye(4)
    assert is_coisotropic(Subspace.from_basis(e[:, :2]))
    assert not is_coisotropic(Subspace.from_basis(e[:, [0, 2]]))
    normal = rng_for(5).standard_normal((1, 4))
    assert is_coisotropic(Subspace.from_basis(scipy.linalg.null_space(normal)))


def test_dependent_basis_rejected():
    with pytest.raises(InputError):
        Subspace.from_basis(np.array([[1.0, 2.0], [0.0, 0.0], [1.0, 2.0], [0.0, 0.0]]))


def test_characteristic_quotient_dimensions():
    lagrangian = Subspace.from_basis(np.eye(4)[:, :2])
    assert characteristic_quotient(lagrangian).dim == 0

    full = characteristic_quotient(Subspace.from_basis(np.eye(4)))
    assert full.dim == 4
    assert abs(np.linalg.det(full.induced_form)) == pytest.approx(1.0)

    hyperplane = characteristic_quotient(Subspace.from_basis(np.eye(4)[:, :3]))
    assert hyperplane.dim == 2
    assert np.allclose(hyperplane.induced_form, -hyperplane.induced_form.T)
    assert abs(np.linalg.det(hyperplane.induced_form)) > 0.5


def test_characteristic_quotient_rejects_non_coisotropic():
    with pytest.raises(NotCoisotropicError):
        characteristic_quotient(Subspace.from_basis(np.eye(4)[:, [0, 2]]))


def test_adapted_frame_maps_model_onto_space():
    n, k = 3, 2
    t = random_symplectic(rng_for(6), n, 'generic', scale=0.3)
    space = Subspace.from_basis(t @ model_coisotropic(n, k))
    frame = adapted_frame(space)
    idx = frame_indices(n, k)
    assert symplectic_residual(frame) < 1e-8
    assert same_span(Subspace.from_basis(frame[:, idx['coiso']]), space, 1e-8)
    assert same_span(Subspace.from_basis(frame[:, idx['q']]), symplectic_complement(space), 1e-8)


def test_constant_loop_has_constant_frames():
    loop = constant_loop(Subspace.from_basis(model_coisotropic(2, 1)), 8)
    for frame in loop.frames:
        assert np.allclose(frame, loop.frames[0], atol=1e-10)
    assert loop.oriented


def test_line_loop_frames_rotate_continuously():
    times = np.linspace(0.0, 1.0, 65)
    loop = CoisotropicLoop.from_subspaces(times, [_line(math.pi * t) for t in times])
    assert loop.codim == 1
    for t, frame in zip(times, loop.frames):
        assert symplectic_residual(frame) < 1e-8
        column = frame[:, 0] / np.linalg.norm(frame[:, 0])
        assert abs(column @ np.array([math.cos(math.pi * t), math.sin(math.pi * t)])) == pytest.approx(1.0)
    for prev, frame in zip(loop.frames, loop.frames[1:]):
        assert np.linalg.norm(frame - prev, 2) < 0.2
    assert loop.frames[-1][:, 0] @ loop.frames[0][:, 0] < 0
    assert not loop.oriented


def test_sparse_loop_requires_refinement():
    times = np.linspace(0.0, 1.0, 5)
    with pytest.raises(RefinementRequired) as exc:
        transport_frames([_line(math.pi * t) for t in times], 1)
    assert exc.value.exit_code == 3


def test_hyperplane_full_turn_transports_continuously():
    times = np.linspace(0.0, 1.0, 257)
    hyperplane = np.eye(4)[:, [0, 1, 3]]
    subspaces = [Subspace.from_basis(plane_rotation(2, 0, 2 * math.pi * t) @ hyperplane) for t in times]
    frames = transport_frames(subspaces, 1)
    for frame, space in zip(frames, subspaces):
        assert symplectic_residual(frame) < 1e-8
        assert contains(space, Subspace.from_basis(frame[:, frame_indices(2, 1)['coiso']]))
    for prev, frame in zip(frames, frames[1:]):
        assert np.linalg.norm(frame - prev, 2) < 0.2
    assert np.allclose(frames[-1], frames[0], atol=1e-6)


def test_standard_j_shape():
    assert np.array_equal(standard_j(1), np.array([[0.0, -1.0], [1.0, 0.0]]))
