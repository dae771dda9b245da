"""Tests for the Maslov index of coisotropic loops with quotient holonomy."""

import sys
import os
import math

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest

from sympidx.errors import InputError
from sympidx.indices import RecapData, mean_index, recap_mean_index
from sympidx.maslov import (
    BLOCK_ASSEMBLY, FRAME_TRANSPORT, CoisotropicLoop, HolonomyPath, build_lift, constant_loop, embed_quotient,
    homogeneity_cover, lift_residuals, maslov_index, model_coisotropic, recap_maslov, well_definedness_check,
)
from sympidx.sampling import random_coisotropic_case, rng_for, rotation_block
from sympidx.sympcore import Subspace, plane_rotation


def _rotating_holonomy(samples: int, turns: float = 1.0) -> HolonomyPath:
    times = np.linspace(0.0, 1.0, samples)
    return HolonomyPath.from_maps(times, [rotation_block(2 * math.pi * turns * t) for t in times])


def _model_loop(samples: int) -> CoisotropicLoop:
    return constant_loop(Subspace.from_basis(model_coisotropic(2, 1)), samples)


def test_constant_lagrangian_loop_is_zero():
    loop = constant_loop(Subspace.from_basis(np.eye(4)[:, :2]), 33)
    holonomy = HolonomyPath.from_maps(loop.times, np.zeros((33, 0, 0)))
    assert loop.quotient_dim == 0
    assert abs(maslov_index(loop, holonomy).value) <= 1e-12


def test_rotating_holonomy_on_constant_loop():
    loop = _model_loop(129)
    report = maslov_index(loop, _rotating_holonomy(129))
    assert report.value == pytest.approx(-2.0, abs=1e-8)


def test_homogeneity_under_covers():
    loop = _model_loop(129)
    holonomy = _rotating_holonomy(129)
    cover, cover_holonomy = homogeneity_cover(loop, holonomy, 2)
    assert len(cover) == 257
    assert cover.metadata['cover'] == 2
    assert maslov_index(cover, cover_holonomy).value == pytest.approx(-4.0, abs=1e-8)

    same_loop, same_holonomy = homogeneity_cover(loop, holonomy, 1)
    assert same_loop is loop and same_holonomy is holonomy
    with pytest.raises(InputError):
        homogeneity_cover(loop, holonomy, 0)


def test_both_strategies_agree():
    loop = _model_loop(65)
    holonomy = _rotating_holonomy(65, 0.5)
    report = well_definedness_check(loop, holonomy)
    assert report.passed
    assert report.difference <= 1e-6
    assert report.to_dict()['passed'] is True


def test_lift_residuals_are_small():
    loop = _model_loop(65)
    holonomy = _rotating_holonomy(65)
    for strategy in (FRAME_TRANSPORT, BLOCK_ASSEMBLY):
        lift = build_lift(loop, holonomy, strategy)
        span, quotient = lift_residuals(loop, holonomy, lift.frames)
        assert span <= 1e-7 and quotient <= 1e-7
        assert lift.metadata['strategy'] == strategy


def test_half_turn_line_loop():
    times = np.linspace(0.0, 1.0, 65)
    lines = [np.array([[math.cos(math.pi * t)], [math.sin(math.pi * t)]]) for t in times]
    loop = CoisotropicLoop.from_subspaces(times, lines)
    holonomy = HolonomyPath.from_maps(times, np.zeros((65, 0, 0)))
    assert not loop.oriented
    assert abs(maslov_index(loop, holonomy).value) == pytest.approx(1.0, abs=1e-6)


def test_declared_orientation_must_match():
    times = np.linspace(0.0, 1.0, 65)
    lines = [np.array([[math.cos(math.pi * t)], [math.sin(math.pi * t)]]) for t in times]
    with pytest.raises(InputError, match='declared orientable'):
        CoisotropicLoop.from_subspaces(times, lines, oriented=True)


def test_random_stabilizer_lift_matches_mean_index():
    case = random_coisotropic_case(rng_for(7), 2, 1, samples=257, family='constant')
    mu = maslov_index(case.loop, case.holonomy).value
    assert mu == pytest.approx(-mean_index(case.lift).value, abs=1e-6)


def test_recap_maslov():
    assert recap_maslov(12, RecapData(c1_pairing=0)) == 12
    assert recap_maslov(12, RecapData(c1_pairing=-3)) == 6
    recap = RecapData(c1_pairing=2)
    assert recap_maslov(-5.0, recap) == -recap_mean_index(5.0, recap)


def test_embed_quotient_layout():
    out = embed_quotient(2, 1, 2 * np.eye(2))
    assert np.array_equal(np.diag(out), [1.0, 2.0, 1.0, 2.0])


def test_rejects_unknown_strategy_and_mismatched_grids():
    loop = _model_loop(65)
    with pytest.raises(InputError, match='unknown lift strategy'):
        maslov_index(loop, _rotating_holonomy(65), 'shortest')
    with pytest.raises(InputError, match='different times'):
        maslov_index(loop, _rotating_holonomy(33))


def test_holonomy_validation():
    times = np.linspace(0.0, 1.0, 3)
    with pytest.raises(InputError, match='not the identity'):
        HolonomyPath.from_maps(times, [rotation_block(0.5)] * 3)
    with pytest.raises(InputError, match='not symplectic'):
        HolonomyPath.from_maps(times, [np.eye(2), np.eye(2), 2 * np.eye(2)])
    with pytest.raises(InputError):
        HolonomyPath.from_maps(times, np.zeros((3, 3, 3)))


def test_loop_must_close():
    times = np.linspace(0.0, 1.0, 9)
    lines = [np.array([[math.cos(0.1 * t)], [math.sin(0.1 * t)]]) for t in times]
    with pytest.raises(InputError, match='does not close'):
        CoisotropicLoop.from_subspaces(times, lines)


def test_rotating_hyperplane_loop():
    times = np.linspace(0.0, 1.0, 257)
    hyperplane = np.eye(4)[:, [0, 1, 3]]
    subspaces = [plane_rotation(2, 0, 2 * math.pi * t) @ hyperplane for t in times]
    loop = CoisotropicLoop.from_subspaces(times, subspaces)
    holonomy = HolonomyPath.from_maps(times, [np.eye(2)] * len(times))
    assert loop.oriented
    assert maslov_index(loop, holonomy).value == pytest.approx(-2.0, abs=1e-6)
    assert well_definedness_check(loop, holonomy).passed
