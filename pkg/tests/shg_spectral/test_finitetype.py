import numpy as np
import pytest

from shg_spectral.finitetype import critical_points, finite_type_branch_points, finite_type_project, initial_tail, interp_delta, phi_step
from shg_spectral.monodromy import delta0, lambda_k0, mu_k0
from shg_spectral.spectral.divisor import vacuum_divisor


K = 4
LABELS = np.arange(-K, K + 1)


def _vacuum_node_data():
    lambdas = np.array([lambda_k0(k) for k in LABELS], dtype=complex)
    values = np.array([2.0 * mu_k0(k) for k in LABELS], dtype=complex)
    return lambdas, values

def test_vacuum_interpolant_is_delta0():
    lambdas, values = _vacuum_node_data()
    delta = interp_delta(LABELS, lambdas, values, K)
    lam = np.array([2.0 + 1j, 37.0 - 4j, 0.05 + 0.01j])
    assert np.allclose(delta(lam), delta0(lam), rtol=1e-8)
    assert delta.residual() < 1e-9

def test_interpolant_is_linear_in_values():
    lambdas, values = _vacuum_node_data()
    base = interp_delta(LABELS, lambdas, values, K)
    bumped_values = values.copy()
    j = K + 1
    bumped_values[j] += 1e-3
    bumped = interp_delta(LABELS, lambdas, bumped_values, K)
    lam = np.array([3.0 + 0.5j, 200.0 + 20j])
    cardinal = base.product.cardinals(lam)[:, j]
    assert np.allclose(bumped(lam) - base(lam), 1e-3 * cardinal, atol=1e-10)

def test_kept_radius_out_of_range(config):
    with pytest.raises(ValueError):
        finite_type_project(vacuum_divisor(3), 5, config=config)

@pytest.mark.slow
def test_vacuum_is_already_finite_type(small_config):
    D = vacuum_divisor(K)
    result = finite_type_project(D, 2, config=small_config)
    assert result.iterations == 1
    assert result.defect < 1e-10
    assert result.distance < 1e-8
    for k in (3, 4, -3, -4):
        assert result.D_star.entry(k).lam == pytest.approx(lambda_k0(k), rel=1e-8)
    pairs = finite_type_branch_points(result, small_config)
    assert pairs.pair(4).double

def test_vacuum_critical_points_are_the_nodes(small_config):
    lambdas, values = _vacuum_node_data()
    delta = interp_delta(LABELS, lambdas, values, K)
    critical = critical_points(delta, K, [-2, -1, 1, 2], small_config, verify=False)
    assert critical.eta_star is None
    for k in (-2, -1, 1, 2):
        assert critical[k] == pytest.approx(lambda_k0(k), rel=1e-6)

def test_vacuum_tail_is_a_fixed_point(small_config):
    D = vacuum_divisor(K)
    z = initial_tail(D, 2)
    assert sorted(z) == [-4, -3, 3, 4]
    assert max(abs(v) for v in z.values()) < 1e-12
    step = phi_step(D, 2, z, small_config)
    assert step.defect < 1e-6
    assert max(abs(v) for v in step.z.values()) < 1e-6

@pytest.mark.slow
def test_small_cosine_projection(config):
    from shg_spectral.potential import cosine_potential
    from shg_spectral.spectral.divisor import find_divisor

    D = find_divisor(cosine_potential(0.1), 16, config)
    result = finite_type_project(D, 4, config=config)
    assert result.iterations <= 30
    assert result.contraction < 1
    assert result.defect < 1e-8
    distances = [result.distance] + [finite_type_project(D, N, config=config).distance for N in (8, 12)]
    assert distances[0] > distances[1] > distances[2]
