import numpy as np
import pytest

from shg_spectral.errors import SingularPointError
from shg_spectral.monodromy import lambda_k0, mu_k0, vacuum_entries
from shg_spectral.potential import cosine_potential, make_potential, vacuum, variation
from shg_spectral.spectral.divisor import (
    annulus_counts, find_branch_points, find_divisor, is_nonspecial, is_tame, merge_close_zeros, require_regular, sigma_involution, singular_entries,
    track_divisor, vacuum_divisor)
from shg_spectral.spectral.metric import divisor_distance, l2_weight
from shg_spectral.spectral.symplectic import symplectic_identity_check, symplectic_omega, symplectic_omega_tilde
from shg_spectral.utils.utility_classes import DivisorEntry, SpectralDivisor


def test_vacuum_divisor_is_tame():
    D = vacuum_divisor(5)
    assert len(D) == 11
    assert is_tame(D) and is_nonspecial(D)
    assert D.entry(2).mu == mu_k0(2)

def test_double_entry_is_not_tame():
    D = SpectralDivisor((DivisorEntry(-1, 0.01, -1.0), DivisorEntry(0, -1.0, 1.0), DivisorEntry(1, -1.0, 1.0)), 1)
    assert not is_tame(D)
    assert is_nonspecial(D)
    special = D.replace_entries([DivisorEntry(1, -1.0, 2.0)])
    assert not is_nonspecial(special)

def test_sigma_is_an_involution():
    point = (2.0 + 1j, 0.5 - 0.25j)
    assert sigma_involution(sigma_involution(point)) == pytest.approx(point)
    with pytest.raises(ValueError):
        sigma_involution((1.0, 0.0))

def test_weights_and_distance():
    assert l2_weight(2, -1, 3) == 0.5
    assert l2_weight(-2, -1, 3) == 8.0
    assert l2_weight(0, -1, 3) == 1.0
    D = vacuum_divisor(3)
    assert divisor_distance(D, D) == 0.0
    moved = D.replace_entries([DivisorEntry(2, D.entry(2).lam + 1.0, D.entry(2).mu)])
    assert divisor_distance(D, moved) == pytest.approx(0.5)
    assert divisor_distance(moved, D) == divisor_distance(D, moved)
    with pytest.raises(ValueError):
        divisor_distance(D, vacuum_divisor(4))

def test_symplectic_form_on_cosines():
    from shg_spectral.potential import PotentialVariation

    cos = make_potential({1: 0.5, -1: 0.5}, {})
    zero = np.zeros(3, dtype=complex)
    v1 = PotentialVariation(cos.u_hat, zero, 1)
    v2 = PotentialVariation(zero, cos.u_hat, 1)
    assert symplectic_omega(vacuum(), v1, v2) == pytest.approx(0.5)
    assert symplectic_omega(vacuum(), v2, v1) == pytest.approx(-0.5)

def test_omega_tilde_is_antisymmetric():
    D = vacuum_divisor(2)
    dD1 = {1: (1.0 + 0.5j, 0.1), -1: (0.001, 0.2j)}
    dD2 = {1: (0.3, 0.05j), -1: (0.002j, 0.1)}
    assert symplectic_omega_tilde(D, dD1, dD2) == pytest.approx(-symplectic_omega_tilde(D, dD2, dD1))
    assert symplectic_omega_tilde(D, dD1, dD1) == 0

@pytest.mark.slow
def test_vacuum_spectral_data(small_config):
    counts = annulus_counts(vacuum(), 3, small_config)
    assert counts.mismatches(small_config.K_align) == {}
    D = find_divisor(vacuum(), 3, small_config, counts)
    for e in D:
        assert e.lam == pytest.approx(lambda_k0(e.k), rel=1e-8)
        assert e.mu == pytest.approx(mu_k0(e.k), abs=1e-8)
    B = find_branch_points(vacuum(), 3, small_config, counts)
    assert all(pair.double for pair in B if pair.k != 0)

@pytest.mark.slow
def test_small_potential_divisor_is_tracked(small_config):
    p = make_potential({1: 0.05, -1: 0.05}, {})
    D = find_divisor(p, 3, small_config)
    assert is_tame(D, small_config)
    assert divisor_distance(D, vacuum_divisor(3)) < 1.0
    same = track_divisor(p, D, [1, -1], small_config)
    assert same.entry(1).lam == pytest.approx(D.entry(1).lam, rel=1e-8)

def test_vacuum_divisor_sits_on_double_points(config):
    D = vacuum_divisor(1)
    assert singular_entries(vacuum(), D, config) == [-1, 0, 1]
    with pytest.raises(SingularPointError):
        require_regular(vacuum(), D, config)

@pytest.mark.slow
@pytest.mark.parametrize('seeds', [(1, 2), (3, 4), (5, 6)])
def test_symplectic_identity(config, seeds):
    p = make_potential({1: 0.05, -1: 0.05}, {})
    v1, v2 = (variation(p, seed, 0.1) for seed in seeds)
    report = symplectic_identity_check(p, v1, v2, 1e-3, K=24, config=config)
    assert report.K == 24
    assert report.relative_error < 1e-2

def test_close_zeros_merge_with_their_count(caplog):
    lams = np.array([-1.0, -1.0 + 1e-12, -1.0 - 1e-12j, 150.0])
    mus = np.array([1.0, 1.0, 1.0, -1.0])
    with caplog.at_level('WARNING', logger='shg_spectral.spectral.divisor'):
        entries = merge_close_zeros([-1, 0, 1, 2], lams, mus, 1e-8)
    assert [(e.k, e.mult) for e in entries] == [(-1, 3), (2, 1)]
    assert 'multiplicity 3' in caplog.text

def _closed_form_monodromy(p, lams, config=None):
    a0, b0, c0, d0 = vacuum_entries(lams)
    return np.stack([np.stack([a0, b0], axis=-1), np.stack([c0, d0], axis=-1)], axis=-2)

@pytest.mark.parametrize('K', [5, 8, 16])
def test_vacuum_counts_on_large_annuli(config, monkeypatch, K):
    monkeypatch.setattr('shg_spectral.spectral.divisor.monodromy_array', _closed_form_monodromy)
    counts = annulus_counts(vacuum(), K, config)
    assert counts.mismatches(config.K_align, 'c') == {}
    assert counts.mismatches(config.K_align, 'disc') == {}
    assert all(counts.c[k] == 1 for k in range(-K, K + 1) if abs(k) > config.K_align)

@pytest.mark.slow
def test_vacuum_divisor_up_to_eight(config):
    D = find_divisor(vacuum(), 8, config)
    assert D.labels.tolist() == list(range(-8, 9))
    for e in D:
        assert e.lam == pytest.approx(lambda_k0(e.k), rel=1e-8)
        assert e.mu == pytest.approx(mu_k0(e.k), abs=1e-8)

@pytest.mark.slow
def test_cosine_counts_up_to_sixteen(config):
    counts = annulus_counts(cosine_potential(0.3), 16, config)
    for k in range(1, 17):
        assert counts.c[k] == counts.c[-k] == 1
        assert counts.disc[k] == counts.disc[-k] == 2
    assert counts.mismatches(config.K_align, 'c') == {}
    assert counts.mismatches(config.K_align, 'disc') == {}
