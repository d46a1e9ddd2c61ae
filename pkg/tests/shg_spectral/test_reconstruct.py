import numpy as np
import pytest

from shg_spectral.errors import HermiteSystemError, NotTameError
from shg_spectral.monodromy import delta0, vacuum_monodromy
from shg_spectral.reconstruct import (
    a_from_divisor, b_from_divisor, c_from_divisor, curve_from_divisor, curve_mu_branch, d_from_divisor, default_test_grid, hermite_block,
    reconstruct_monodromy, roundtrip_report, tau_from_divisor)
from shg_spectral.spectral.divisor import vacuum_divisor
from shg_spectral.utils.utility_classes import DivisorEntry, SpectralDivisor


def test_vacuum_divisor_gives_vacuum_monodromy(small_config):
    R = reconstruct_monodromy(vacuum_divisor(4), small_config)
    assert R.tau == pytest.approx(1.0, abs=1e-10)
    grid = default_test_grid(12, 0, 4)
    M = R.evaluate(grid)
    for lam, m in zip(grid, M):
        assert np.allclose(m, vacuum_monodromy(lam).as_array(), rtol=1e-8, atol=1e-10)

def test_curve_from_vacuum_divisor(small_config):
    delta = curve_from_divisor(vacuum_divisor(4), small_config)
    grid = default_test_grid(6, 1, 4)
    assert np.allclose(delta(grid), delta0(grid), rtol=1e-8, atol=1e-10)

def test_vacuum_tau():
    assert tau_from_divisor(vacuum_divisor(6)) == pytest.approx(1.0, abs=1e-10)

def test_determinant_of_reconstruction(small_config):
    D = vacuum_divisor(4)
    R = reconstruct_monodromy(D, small_config)
    M = R.matrix(2.0 + 1.0j)
    assert M.det == pytest.approx(1.0, abs=1e-9)

def test_multiple_entry_needs_curve_data(small_config):
    D = vacuum_divisor(2)
    doubled = SpectralDivisor(tuple(e for e in D if e.k not in (0, 1)) + (DivisorEntry(0, D.entry(0).lam, D.entry(0).mu, 2),), 2)
    with pytest.raises(NotTameError):
        reconstruct_monodromy(doubled, small_config)

def test_test_grid_is_seeded():
    assert np.array_equal(default_test_grid(8, 3), default_test_grid(8, 3))
    assert not np.array_equal(default_test_grid(8, 3), default_test_grid(8, 4))

@pytest.mark.slow
def test_roundtrip_small_potential(small_config, cos_potential):
    report = roundtrip_report(cos_potential, 4, default_test_grid(8, 1, 4), small_config)
    assert report.n_points == 8
    assert report.tau_error < 1e-8
    assert report.max_error < 1e-4
    assert report.determinant_error < 1e-6

def test_entries_from_vacuum_divisor(small_config):
    D = vacuum_divisor(4)
    lam = np.array([2.0 + 1.0j, 0.3 - 0.2j])
    M0 = [vacuum_monodromy(l) for l in lam]
    assert np.allclose(a_from_divisor(D, lam, small_config), [m.a for m in M0], rtol=1e-8, atol=1e-10)
    assert np.allclose(b_from_divisor(D, lam, small_config), [m.b for m in M0], rtol=1e-8, atol=1e-10)
    assert np.allclose(c_from_divisor(D, lam, small_config), [m.c for m in M0], rtol=1e-8, atol=1e-10)
    assert np.allclose(d_from_divisor(D, lam, small_config), [m.d for m in M0], rtol=1e-8, atol=1e-10)

def test_hermite_block_rejects_branch_point(small_config):
    D = vacuum_divisor(2)
    entry = D.entry(1)
    with pytest.raises(HermiteSystemError):
        hermite_block(D, 1, curve_mu_branch(delta0, entry.lam, entry.mu), small_config)

@pytest.mark.slow
def test_roundtrip_at_twenty_four(config, cos_potential):
    report = roundtrip_report(cos_potential, 24, default_test_grid(20, 0, 8), config)
    assert report.n_points == 20
    assert report.max_error < 1e-3
    assert report.tau_error < 1e-4

@pytest.mark.slow
def test_roundtrip_residuals_fall_with_K(config, cos_potential):
    grid = default_test_grid(20, 0, 8)
    errors = [roundtrip_report(cos_potential, K, grid, config).max_error for K in (12, 24, 48)]
    assert errors[0] > errors[1] > errors[2]
