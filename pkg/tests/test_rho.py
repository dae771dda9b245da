"""Tests for the ρ-invariant and its spectral classification."""

import sys
import os
import cmath
import math

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import floats, integers

from sympidx.errors import InputError, NotSymplecticError
from sympidx.pathio import canonical_dumps
from sympidx.rho import (
    BOUNDARY, NEGATIVE_REAL, OFF_CIRCLE, UNIT_CIRCLE, classify_spectrum, compute_rho,
    krein_positive_multiplicity, rho_determinant_oracle, rho_phase,
)
from sympidx.sampling import (
    hyperbolic_block, loxodromic_block, random_symplectic, rng_for, rotation_block,
)
from sympidx.sympcore import direct_sum, symplectic_inverse, validate_symplectic


def test_identity_is_one():
    assert compute_rho(np.eye(4)) == 1


def test_rotation_phase():
    for theta in (0.7, 2.0, 4.0, 5.5):
        assert abs(compute_rho(rotation_block(theta)) - cmath.exp(1j * theta)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(floats(0.05, 2 * math.pi - 0.05))
def test_rotation_matches_determinant(theta):
    rotation = rotation_block(theta)
    assert abs(compute_rho(rotation) - rho_determinant_oracle(rotation)) < 1e-9


def test_minus_identity():
    spectrum = classify_spectrum(-np.eye(2))
    assert spectrum.has_boundary
    assert spectrum.m0 == 1
    assert compute_rho(-np.eye(2)) == -1


def test_hyperbolic_is_exactly_plus_or_minus_one():
    assert compute_rho(np.diag([2.0, 0.5])) == 1
    assert compute_rho(np.diag([-2.0, -0.5])) == -1
    both = direct_sum(hyperbolic_block(0.4, negative=True), hyperbolic_block(0.7, negative=True))
    assert compute_rho(both) == 1


def test_classification_tags():
    matrix = direct_sum(direct_sum(rotation_block(1.0), hyperbolic_block(0.5, negative=True)),
                        loxodromic_block(0.3, 0.8))
    spectrum = classify_spectrum(matrix)
    tags = sorted(c.tag for c in spectrum.clusters)
    assert tags.count(UNIT_CIRCLE) == 2
    assert tags.count(NEGATIVE_REAL) == 2
    assert tags.count(OFF_CIRCLE) == 4
    assert BOUNDARY not in tags
    assert spectrum.m0 == 1
    assert len(spectrum.circle_clusters()) == 1
    assert abs(compute_rho(matrix) + cmath.exp(1j)) < 1e-10
    canonical_dumps(spectrum.to_dict())


def test_krein_positive_multiplicity():
    assert krein_positive_multiplicity(rotation_block(1.0), cmath.exp(1j)) == 1
    assert krein_positive_multiplicity(rotation_block(-1.0), cmath.exp(1j)) == 0
    assert krein_positive_multiplicity(rotation_block(-1.0), cmath.exp(-1j)) == 0
    with pytest.raises(InputError):
        krein_positive_multiplicity(rotation_block(1.0), 0.5)


def test_repeated_eigenvalue_signatures():
    theta = 0.9
    same = direct_sum(rotation_block(theta), rotation_block(theta))
    assert krein_positive_multiplicity(same, cmath.exp(1j * theta)) == 2
    assert abs(compute_rho(same) - cmath.exp(2j * theta)) < 1e-10

    mixed = direct_sum(rotation_block(theta), rotation_block(-theta))
    assert krein_positive_multiplicity(mixed, cmath.exp(1j * theta)) == 1
    assert abs(compute_rho(mixed) - 1) < 1e-10


def test_naturality_under_conjugation():
    matrix = direct_sum(rotation_block(1.2), rotation_block(2.9))
    t = random_symplectic(rng_for(11), 2, 'generic', scale=0.3)
    assert abs(compute_rho(t @ matrix @ symplectic_inverse(t)) - compute_rho(matrix)) < 1e-8


def test_product_axiom():
    first, second = rotation_block(0.4), direct_sum(rotation_block(2.2), np.diag([3.0, 1 / 3]))
    assert abs(compute_rho(direct_sum(first, second)) - compute_rho(first) * compute_rho(second)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(integers(0, 2 ** 32), integers(1, 4))
def test_determinant_oracle_on_orthogonal(seed, n):
    matrix = random_symplectic(rng_for(seed), n, 'orthogonal')
    assert abs(compute_rho(matrix) - rho_determinant_oracle(matrix)) < 1e-9


def test_determinant_oracle_rejects_non_orthogonal():
    with pytest.raises(InputError):
        rho_determinant_oracle(np.diag([2.0, 0.5]))


def test_rejects_non_symplectic():
    with pytest.raises(NotSymplecticError):
        compute_rho(np.diag([2.0, 2.0]))


def test_rho_phase():
    assert rho_phase(rotation_block(1.5)) == pytest.approx(1.5)
    assert rho_phase(np.eye(2)) == 0.0


def test_certified_and_trusted_inputs_skip_validation():
    matrix = direct_sum(rotation_block(0.7), loxodromic_block(0.5, 1.1))
    certified = classify_spectrum(validate_symplectic(matrix))
    assert certified.to_dict() == classify_spectrum(matrix).to_dict()
    assert certified.quadruple_residual < 1e-10
    assert compute_rho(matrix, trusted=True) == compute_rho(matrix)
