"""Tests for the mean index, the Conley–Zehnder index and path operations."""

import sys
import os
import math

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest

from sympidx import indices
from sympidx.errors import DegenerateEndpointError, InputError, NotSymplecticError, PhaseStepTooLarge
from sympidx.flows import QuadraticHamiltonian, linearized_flow, one_parameter_path
from sympidx.indices import (
    RecapData, SymplecticPath, check_index_gap, concatenate_paths, conjugate_path, cz_index, cz_parity_ok,
    cz_window, direct_sum_path, is_degenerate, iterate_path, mean_index, normal_form_extension_path,
    path_from_generator, phase_track, pointwise_product, recap_action, recap_cz_index, recap_mean_index,
    restrict_path, unitary_extension_path,
)
from sympidx.sampling import random_symplectic, rng_for, rotation_block
from sympidx.sympcore import direct_sum, standard_j, symplectic_inverse, symplectic_residual


def rotation_path(theta: float, samples: int = 64) -> SymplecticPath:
    """Ψ(t) = R(2πθt)."""
    return one_parameter_path(2 * math.pi * theta * standard_j(1), samples)


def test_constant_identity_path():
    path = SymplecticPath.from_frames([0.0, 1.0], [np.eye(2), np.eye(2)])
    report = mean_index(path)
    assert report.value == 0.0
    assert report.refinement_depth == 0


def test_full_turn_rotation():
    report = mean_index(rotation_path(1.0))
    assert report.value == pytest.approx(2.0, abs=1e-10)
    assert report.max_phase_step < math.pi / 2


def test_planar_rotation_cz_closed_form():
    for theta in (0.25, 0.5, 1.3, 2.7):
        hamiltonian = QuadraticHamiltonian.from_matrix(-2 * math.pi * theta * np.eye(2))
        report = cz_index(linearized_flow(hamiltonian, 1.0, 64))
        assert report.value == 2 * math.floor(theta) + 1
        assert report.oracle_residual < 1e-6


def test_hyperbolic_cz_is_zero():
    path = one_parameter_path(np.diag([1.0, -1.0]), 16)
    assert mean_index(path).value == 0.0
    report = cz_index(path)
    assert report.value == 0
    assert report.oracle_residual <= 1e-12


def test_small_maximum_normalization():
    for n in (1, 2, 3):
        hamiltonian = QuadraticHamiltonian.from_matrix(-0.1 * np.eye(2 * n))
        assert cz_index(linearized_flow(hamiltonian, 1.0, 32)).value == n


def test_index_gap():
    half = check_index_gap(rotation_path(0.5))
    assert half.passed
    assert half.mean_index == pytest.approx(1.0, abs=1e-10)
    assert half.cz_index == 1

    report = check_index_gap(rotation_path(1.3))
    assert report.passed
    assert report.mean_index == pytest.approx(2.6, abs=1e-10)
    assert report.cz_index == 3
    assert report.gap == pytest.approx(0.4, abs=1e-10)


def test_degenerate_endpoint_is_an_error():
    path = SymplecticPath.from_frames([0.0, 1.0], [np.eye(2), np.eye(2)])
    assert is_degenerate(path.endpoint)
    with pytest.raises(DegenerateEndpointError):
        check_index_gap(path)


def test_gap_check_tracks_phase_once(monkeypatch):
    calls = []
    original = indices.mean_index

    def counting(path, *args, **kwargs):
        calls.append(path)
        return original(path, *args, **kwargs)
    monkeypatch.setattr(indices, 'mean_index', counting)
    report = check_index_gap(rotation_path(1.3))
    assert report.cz_index == 3
    assert len(calls) == 1


def test_cz_window():
    assert cz_window(12, 10, 3, 1)
    assert not cz_window(12, 8, 3, 1)
    assert cz_window(0, 0, 2, 2)
    assert not cz_window(1.9999999, 3, 2, 1)
    assert cz_window(1.9999999, 3, 2, 1, slack=1e-6)
    with pytest.raises(InputError):
        cz_window(0, 0, 2, 3)


def test_recap_arithmetic():
    assert recap_mean_index(12, RecapData(c1_pairing=0)) == 12
    assert recap_mean_index(12, RecapData(c1_pairing=3)) == 6
    assert recap_mean_index(0, RecapData(c1_pairing=-1)) == 2
    assert recap_cz_index(5, RecapData(c1_pairing=1)) == 3
    assert recap_action(1.5, RecapData(c1_pairing=0, omega_pairing=0.0)) == 1.5
    assert recap_action(1.5, RecapData(c1_pairing=0, omega_pairing=2 * math.pi)) == 1.5 - 2 * math.pi
    assert recap_action(0.0, RecapData(c1_pairing=0, omega_pairing=-0.25)) == 0.25


def test_sampled_path_without_generator_cannot_refine():
    frames = [np.eye(2), rotation_block(2.0), rotation_block(4.0)]
    path = SymplecticPath.from_frames([0.0, 0.5, 1.0], frames)
    with pytest.raises(PhaseStepTooLarge) as exc:
        mean_index(path)
    assert exc.value.exit_code == 3
    assert exc.value.max_step == pytest.approx(2.0)


def test_refinement_through_generator():
    path = path_from_generator(lambda t: rotation_block(5.0 * t), 3)
    report = mean_index(path)
    assert report.value == pytest.approx(5.0 / math.pi, abs=1e-10)
    assert report.refinement_depth == 1


def test_exhausted_budget():
    path = path_from_generator(lambda t: rotation_block(8.0 * t), 3)
    with pytest.raises(PhaseStepTooLarge) as exc:
        mean_index(path, refinement_budget=1)
    assert exc.value.depth == 1
    assert mean_index(path, refinement_budget=2).value == pytest.approx(8.0 / math.pi, abs=1e-10)


def test_path_validation_messages():
    with pytest.raises(InputError, match='times not strictly increasing at index 2'):
        SymplecticPath.from_frames([0.0, 0.5, 0.5, 1.0], [np.eye(2)] * 4)
    with pytest.raises(InputError, match='frame 0 is not the identity'):
        SymplecticPath.from_frames([0.0, 1.0], [2 * np.eye(2), np.eye(2)])
    with pytest.raises(NotSymplecticError, match='frame 1 is not symplectic'):
        SymplecticPath.from_frames([0.0, 1.0], [np.eye(2), np.diag([2.0, 2.0])])
    with pytest.raises(InputError):
        SymplecticPath.from_frames([0.0, 0.9], [np.eye(2), np.eye(2)])


def test_concatenation_property():
    generator = np.array([[0.3, 4.0], [-2.0, -0.3]])
    path = one_parameter_path(generator, 101)
    total = mean_index(path).value
    head = mean_index(restrict_path(path, 0, 40)).value
    tail = mean_index(restrict_path(path, 40, 100)).value
    assert total == pytest.approx(head + tail, abs=1e-8)


def test_concatenate_and_iterate():
    path = rotation_path(0.3)
    joined = concatenate_paths(path, path)
    assert mean_index(joined).value == pytest.approx(1.2, abs=1e-10)
    tripled = iterate_path(path, 3)
    assert mean_index(tripled).value == pytest.approx(1.8, abs=1e-10)
    assert np.allclose(tripled.endpoint, rotation_block(2 * math.pi * 0.9), atol=1e-10)
    with pytest.raises(InputError):
        iterate_path(path, 0)


def test_naturality_and_products():
    path = one_parameter_path(np.array([[0.1, 3.0], [-3.0, -0.1]]), 64)
    delta = mean_index(path).value
    t = random_symplectic(rng_for(21), 1, 'generic', scale=0.3)
    assert mean_index(conjugate_path(path, t)).value == pytest.approx(delta, abs=1e-8)

    other = rotation_path(0.2)
    assert mean_index(direct_sum_path(path, other)).value == pytest.approx(delta + 0.4, abs=1e-8)

    loop = rotation_path(1.0)
    assert mean_index(pointwise_product(loop, path)).value == pytest.approx(delta + 2.0, abs=1e-8)


def test_phase_track_is_additive():
    path = rotation_path(0.4, 20)
    phases, steps = phase_track(path.frames)
    assert phases.shape == (20,)
    assert np.sum(steps) == pytest.approx(0.8 * math.pi, abs=1e-10)


def test_unitary_extension_ends_at_minus_identity():
    frames = unitary_extension_path(rotation_block(1.0), 16)
    assert frames.shape == (17, 2, 2)
    assert np.allclose(frames[-1], -np.eye(2), atol=1e-12)
    with pytest.raises(DegenerateEndpointError):
        unitary_extension_path(np.eye(2))


def test_cz_parity():
    endpoint = rotation_block(2 * math.pi * 0.5)
    assert cz_parity_ok(endpoint, 1)
    assert not cz_parity_ok(endpoint, 2)


def _mixed_generator(theta: float = 0.3, stretch: float = 0.5) -> np.ndarray:
    """A conjugated elliptic ⊕ hyperbolic Hamiltonian matrix in ℝ⁴."""
    t = random_symplectic(rng_for(3), 2, 'generic')
    generator = direct_sum(2 * math.pi * theta * standard_j(1), np.diag([stretch, -stretch]))
    return t @ generator @ symplectic_inverse(t)


def test_normal_form_extension_of_general_endpoint():
    endpoint = one_parameter_path(_mixed_generator(), 64).endpoint
    frames = normal_form_extension_path(endpoint, 64)
    assert frames.shape == (65, 4, 4)
    for frame in frames:
        assert symplectic_residual(frame) < 1e-8
        assert not is_degenerate(frame)
    values = np.sort_complex(np.linalg.eigvals(frames[-1]))
    assert np.allclose(values, [-1.0, -1.0, 0.5, 2.0], atol=1e-6)


def test_cz_oracle_covers_non_orthogonal_endpoints():
    path = one_parameter_path(_mixed_generator(), 64)
    report = cz_index(path)
    assert report.value == 1
    assert report.oracle_residual is not None
    assert report.oracle_residual < 1e-6
    assert cz_index(path, oracle=False).oracle_residual is None
