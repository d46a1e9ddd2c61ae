import numpy as np
import pytest
from scipy.integrate import quad

from shg_spectral.jacobi.curve import Gap, make_curve_from_gaps
from shg_spectral.jacobi.periods import (
    PeriodLattice, a_periods, cycle_certificates, dual_forms, form_degrees, period_lattice, signed_intersection, winding_number)


@pytest.fixture
def genus_one():
    return make_curve_from_gaps([Gap(1, 3.0, 5.0)])

@pytest.fixture
def genus_two():
    return make_curve_from_gaps([Gap(1, 3.0, 5.0), Gap(2, 20.0, 24.0)])

def test_form_degrees():
    assert form_degrees(3) == [(0, 4), (2, 2), (4, 0)]
    assert form_degrees(0) == []
    with pytest.raises(ValueError):
        form_degrees(-1)

def test_genus_one_a_period_against_quad(genus_one, config):
    # λ = 4 + t on the cut; dλ/√((λ - 3)(λ - 5)) integrates against the Chebyshev weight
    value, _ = quad(lambda t: (4 + t) ** -0.5, -1, 1, weight='alg', wvar=(-0.5, -0.5))
    P = a_periods(genus_one, config=config)
    assert P.shape == (1, 1)
    assert P[0, 0] == pytest.approx(2j * value, rel=1e-12)

def test_dual_basis_is_normalized(genus_two, config):
    basis = dual_forms(genus_two, config=config)
    assert np.allclose(basis.normalized_a_periods(), np.eye(2), atol=1e-12)
    assert basis.condition < 1e12

def test_quadrature_is_converged(genus_two):
    coarse = dual_forms(genus_two, n_nodes=48)
    fine = dual_forms(genus_two, n_nodes=96)
    assert np.allclose(coarse.a_period_matrix, fine.a_period_matrix, rtol=1e-12)
    assert np.allclose(coarse.b_period_matrix, fine.b_period_matrix, rtol=1e-9, atol=1e-12)

def test_cycle_certificates_are_canonical(genus_two):
    system = cycle_certificates(genus_two)
    assert system.canonical
    assert np.array_equal(system.AB, np.eye(2, dtype=int))
    assert np.all(system.rhos > 1)

def test_period_matrix_is_symmetric(genus_two, config):
    lattice = period_lattice(dual_forms(genus_two, config=config))
    assert lattice.genus == 2
    assert lattice.symmetry_residual() < 1e-8
    assert abs(np.linalg.det(lattice.omega.imag)) > 0

def test_genus_zero_has_empty_periods(config):
    basis = dual_forms(make_curve_from_gaps([]), config=config)
    assert basis.genus == 0
    assert period_lattice(basis).distance(np.zeros(0)) == 0.0

def test_intersection_numbers():
    theta = np.linspace(0, 2 * np.pi, 101)
    circle = np.exp(1j * theta)
    inward = np.array([2.0 + 0.1j, 0.0 + 0.1j])
    assert signed_intersection(circle, inward) == 1
    assert signed_intersection(circle, inward[::-1]) == -1
    assert winding_number(circle, 0.2) == 1
    assert winding_number(circle, 3.0) == 0

def test_lattice_reduction():
    omega = np.array([[1j, 0.2 + 0.1j], [0.2 + 0.1j, 1.5j]])
    lattice = PeriodLattice(omega)
    offset = np.array([0.3, -0.1 + 0.2j])
    z = offset + np.array([2.0, 0.0]) + omega @ np.array([1.0, -1.0])
    reduced, coefficients = lattice.reduce(z)
    assert np.allclose(reduced, offset)
    assert coefficients.tolist() == [2, 0, 1, -1]
    assert lattice.distance(omega[:, 0] + 1.0) < 1e-12
