import numpy as np
import pytest

from shg_spectral.monodromy import (
    alpha_x, alpha_y, delta0, determinant_defect, discriminant, extended_frame, lambda_k0, lambda_k0_asymptote, monodromy, monodromy_array, monodromy_at,
    monodromy_batch, mu_k0, vacuum_entries, vacuum_generator, vacuum_monodromy, zeta)
from shg_spectral.potential import cosine_potential, make_potential, translate_x, vacuum


def test_zeta_and_vacuum_closed_form():
    assert zeta(1.0) == pytest.approx(0.5)
    M0 = vacuum_monodromy(1.0)
    assert M0.a == pytest.approx(np.cos(0.5))
    assert abs(M0.a - 0.877583) < 1e-6
    assert M0.b == pytest.approx(-np.sin(0.5))
    assert M0.c == pytest.approx(np.sin(0.5))
    assert M0.det == pytest.approx(1.0)

def test_zero_lambda_is_rejected():
    with pytest.raises(ValueError):
        zeta(0.0)

@pytest.mark.parametrize('k', [1, 2, 3])
def test_discriminant_at_vacuum_nodes(k):
    assert delta0(lambda_k0(k)) == pytest.approx(2 * (-1) ** k, abs=1e-9)

def test_vacuum_nodes():
    assert lambda_k0(0) == -1.0
    assert lambda_k0(1) == pytest.approx(155.90, abs=0.01)
    assert abs(lambda_k0(1) - (16 * np.pi**2 - 2)) < 0.02
    assert lambda_k0(-3) * lambda_k0(3) == pytest.approx(1.0)
    assert 0 < lambda_k0(-2) < 1
    assert mu_k0(3) == -1 and mu_k0(-2) == 1
    assert lambda_k0_asymptote(1) == pytest.approx(16 * np.pi**2 - 2)
    assert lambda_k0(-5) == pytest.approx(lambda_k0_asymptote(-5), rel=1e-4)

def test_vacuum_entries_are_even_in_sqrt():
    lam = np.array([2.0 + 1j, 0.3 - 0.7j, -4.0 + 1e-3j])
    a0, b0, c0, d0 = vacuum_entries(lam)
    s = -np.sqrt(lam)
    z = (s + 1 / s) / 4
    assert np.allclose(a0, np.cos(z))
    assert np.allclose(c0, s * np.sin(z))
    assert np.allclose(a0 * d0 - b0 * c0, 1.0)

def test_vacuum_monodromy_integrated(config):
    lams = [1.0, 2.5 + 0.5j, 0.2 - 0.1j, 40.0]
    M = monodromy_array(vacuum(), lams, config)
    for lam, m in zip(lams, M):
        assert np.allclose(m, vacuum_monodromy(lam).as_array(), rtol=1e-8, atol=1e-10)

def test_vacuum_identity_at_minus_one(config):
    M = monodromy(vacuum(), -1.0, config)
    assert np.allclose(M.as_array(), np.eye(2), atol=1e-10)

def test_batch_preserves_order(config):
    p = make_potential({1: 0.1, -1: 0.1}, {0: 0.05})
    lams = [1.0 + 0.5j, 3.0, 0.5 - 0.2j]
    forward = monodromy_batch(p, lams, config)
    backward = monodromy_batch(p, lams[::-1], config)
    for a, b in zip(forward, backward[::-1]):
        assert np.allclose(a.as_array(), b.as_array(), rtol=1e-12)
    single = monodromy(p, lams[0], config)
    assert np.allclose(single.as_array(), forward[0].as_array())

def test_determinant_is_one(config):
    p = make_potential({1: 0.2, -1: 0.2}, {1: 0.1j, -1: -0.1j})
    M = monodromy_array(p, [0.7 + 0.3j, 5.0, 30.0 - 2j], config)
    det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    assert np.abs(det - 1).max() < 1e-9

def test_constant_potential_matches_matrix_exponential(config):
    from scipy.linalg import expm
    from shg_spectral.monodromy import alpha_x

    p = make_potential({0: 0.3}, {})
    lam = 2.0 + 0.5j
    M = monodromy(p, lam, config).as_array()
    assert np.allclose(M, expm(alpha_x(p, 0.0, lam).as_array()), rtol=1e-8, atol=1e-10)
    assert np.allclose(discriminant(p, [lam], config)[0], np.trace(M))

@pytest.mark.parametrize('lam', [2.0 + 1j, -0.3 + 0.1j])
def test_connection_parts_commute_on_vacuum(lam):
    A = alpha_x(vacuum(), 0.4, lam).as_array()
    B = alpha_y(vacuum(), 0.4, lam).as_array()
    assert np.allclose(A @ B, B @ A, atol=1e-14)
    assert np.allclose(np.diag(B), 0.0)

def test_monodromy_with_base_point():
    p = cosine_potential(0.3)
    lam = 3.0 + 0.5j
    M_shifted_base = monodromy_at(p, lam, 0.3)
    assert M_shifted_base.trace == pytest.approx(monodromy(p, lam).trace, rel=1e-8)
    translated = monodromy(translate_x(p, 0.3), lam)
    assert np.allclose(M_shifted_base.as_array(), translated.as_array(), rtol=1e-7, atol=1e-9)
    with pytest.raises(ValueError):
        monodromy_at(p, lam, 1.5)

def test_vacuum_frame_is_matrix_exponential(config):
    from scipy.linalg import expm

    lam = 2.0 + 1.0j
    samples = extended_frame(vacuum(), lam, [0.0, 0.25, 1.0], config)
    assert [s.x for s in samples] == [0.0, 0.25, 1.0]
    assert np.array_equal(samples[0].F.as_array(), np.eye(2))
    assert np.allclose(samples[1].F.as_array(), expm(0.25 * vacuum_generator(lam)), atol=1e-9)
    assert np.allclose(samples[2].F.as_array(), vacuum_monodromy(lam).as_array(), atol=1e-9)

def test_frame_samples_must_be_sorted(config):
    assert extended_frame(vacuum(), 1.0, [], config) == []
    with pytest.raises(ValueError):
        extended_frame(vacuum(), 1.0, [0.5, 0.2], config)

def test_determinant_defect_is_relative():
    M = np.array([[[2, 0], [0, 1]], [[1e6, 1], [0, 1e-6]]], dtype=complex)
    assert np.allclose(determinant_defect(M), [0.2, 0.0])

@pytest.mark.parametrize('lam', [-2000 + 300j, 1500j, 4774.888 + 4000j])
def test_unimodular_far_from_real_axis(config, cos_potential, lam):
    M = monodromy_array(cos_potential, [lam], config)
    assert abs(M[0]).max() > 1e3
    assert determinant_defect(M)[0] < config.det_tol

def test_vacuum_far_from_real_axis(config):
    lam = -2000 + 300j
    M = monodromy_array(vacuum(), [lam], config)[0]
    M0 = vacuum_monodromy(lam).as_array()
    assert np.abs(M - M0).max() < 1e-8 * np.abs(M0).max()

def test_remaining_determinant_defect_is_reported(config, caplog):
    strict = config.updated(det_tol=1e-30, det_refinements=0)
    with caplog.at_level('WARNING', logger='shg_spectral.monodromy'):
        monodromy_array(vacuum(), [-2000 + 300j], strict)
    assert 'Relative determinant defect' in caplog.text

def test_vacuum_node_asymptote_defect_decays_like_k_squared():
    k = np.arange(4, 65)
    defects = np.array([abs(lambda_k0(int(j)) - lambda_k0_asymptote(int(j))) for j in k])
    slope = np.polyfit(np.log(k), np.log(defects), 1)[0]
    assert slope == pytest.approx(-2.0, abs=0.2)

@pytest.mark.slow
def test_vacuum_oracle_over_eight_annuli(config):
    from shg_spectral.spectral.annulus import annulus_samples

    lams = np.concatenate([annulus_samples(k, 2, 8, config) for k in range(-8, 9)])
    lams = lams[np.abs(np.angle(lams)) < np.pi - 0.1]
    assert lams.size >= 200
    M = monodromy_array(vacuum(), lams, config)
    M0 = np.array([vacuum_monodromy(lam).as_array() for lam in lams])
    relative = np.abs(M - M0).reshape(len(lams), 4).max(axis=1) / np.abs(M0).reshape(len(lams), 4).max(axis=1)
    assert relative.max() < 1e-8
    assert determinant_defect(M).max() < config.det_tol
