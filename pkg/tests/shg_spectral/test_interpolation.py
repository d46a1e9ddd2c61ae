import numpy as np
import pytest

from shg_spectral.errors import NodeCollisionError
from shg_spectral.interpolation import TelescopedProduct, c0, c0_over_node, vacuum_cardinals
from shg_spectral.monodromy import lambda_k0
from shg_spectral.spectral.divisor import vacuum_divisor


def test_c0_over_node_matches_direct_quotient():
    lam = np.array([3.0 + 2j, 80.0 - 5j, 0.01 + 0.02j])
    for k in (-1, 0, 1, 2):
        direct = c0(lam) / (lam - lambda_k0(k))
        assert np.allclose(c0_over_node(lam, k), direct, rtol=1e-10)

def test_c0_over_node_at_the_node():
    k = 2
    lam = lambda_k0(k)
    h = 1e-6 * lam
    derivative = (c0([lam + h])[0] - c0([lam - h])[0]) / (2 * h)
    assert c0_over_node([lam], k)[0] == pytest.approx(derivative, rel=1e-6)

def test_vacuum_product_is_c0():
    P = TelescopedProduct.from_divisor(vacuum_divisor(3))
    lam = np.array([1.5 + 0.3j, 400.0 + 10j, 0.002 - 0.001j])
    assert np.allclose(P.value(lam), c0(lam), rtol=1e-10)
    assert P.tau_squared == pytest.approx(1.0)
    assert np.allclose(P.ratio(lam), 1.0)

def test_vacuum_cardinals_interpolate():
    labels = np.array([-1, 0, 1])
    ell = vacuum_cardinals(lambda_k0_array_of(labels), labels)
    assert np.allclose(ell, np.eye(3), atol=1e-9)

def lambda_k0_array_of(labels):
    return np.array([lambda_k0(k) for k in labels], dtype=complex)

def test_root_count_must_match():
    with pytest.raises(ValueError):
        TelescopedProduct(np.ones(2, dtype=complex), np.array([0, 1]), 1)

def test_coincident_roots_are_rejected():
    P = TelescopedProduct(np.array([0.5, 0.5, 150.0], dtype=complex), np.array([-1, 0, 1]), 1)
    with pytest.raises(NodeCollisionError):
        P.require_simple()
