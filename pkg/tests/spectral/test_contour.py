import numpy as np
import pytest

from shg_spectral.errors import ZeroOnContourError
from shg_spectral.monodromy import lambda_k0
from shg_spectral.spectral.annulus import ClosedContour, Contour, annulus_boundary, annulus_index, level_curve
from shg_spectral.spectral.contour import cauchy_derivative, count_zeros, newton_refine, taylor_coefficients, winding_from_samples


def test_winding_of_circles():
    theta = 2 * np.pi * np.arange(64) / 64
    circle = np.exp(1j * theta)
    values = np.column_stack([circle, circle**2, circle + 3])
    windings, max_step = winding_from_samples(values)
    assert np.allclose(windings, [1, 2, 0])
    assert max_step.max() < np.pi / 2

@pytest.mark.parametrize('k', [-3, -1, 0, 1, 2, 5])
def test_vacuum_nodes_lie_in_their_annulus(k):
    assert annulus_index(lambda_k0(k)) == k

def test_level_curve_has_constant_zeta_modulus():
    from shg_spectral.monodromy import zeta

    curve = level_curve(2.5 * np.pi, True)
    points = curve(np.linspace(0.05, 0.95, 7))
    assert np.allclose(np.abs(zeta(points)), 2.5 * np.pi, rtol=1e-10)

def test_taylor_coefficients_of_polynomial():
    coeffs = taylor_coefficients(lambda z: 1 + 2 * z + 3 * z**2, 0.0, 0.5, 16, 4)
    assert np.allclose(coeffs, [1, 2, 3, 0], atol=1e-12)
    assert cauchy_derivative(np.exp, 1.0, 0.1, 16, 2) == pytest.approx(np.e, rel=1e-10)

def test_newton_finds_simple_root(config):
    root = newton_refine(lambda z: z**2 - 2, 1.3, lambda z: 0.01, config)
    assert root == pytest.approx(np.sqrt(2), rel=1e-12)

@pytest.mark.parametrize('k, outer, inner', [(2, 2.5, 1.5), (-1, 0.5, 1.5), (0, 0.5, 0.5)])
def test_annulus_boundary_levels(k, outer, inner, config):
    from shg_spectral.monodromy import zeta

    outer_curve, inner_curve = annulus_boundary(k, 32, config)
    assert outer_curve.shape == inner_curve.shape == (32,)
    assert np.allclose(np.abs(zeta(outer_curve)), outer * np.pi, rtol=1e-10)
    assert np.allclose(np.abs(zeta(inner_curve)), inner * np.pi, rtol=1e-10)
    assert np.abs(outer_curve).min() > np.abs(inner_curve).max()

def _circle(radius: float) -> ClosedContour:
    return ClosedContour(lambda t: radius * np.exp(2j * np.pi * t), 64)

def test_count_zeros_inside_circle_and_annulus(config):
    f = lambda z: (z**2 - 1) * (z - 3)
    assert count_zeros(f, _circle(2.0), config) == 2
    assert count_zeros(f, Contour.between(_circle(4.0), _circle(2.0)), config) == 1
    columns = count_zeros(lambda z: np.column_stack([f(z), z - 0.5]), _circle(2.0), config)
    assert list(columns) == [2, 1]

def test_zero_on_contour_is_reported(config):
    with pytest.raises(ZeroOnContourError):
        count_zeros(lambda z: z - 2.0, _circle(2.0), config)
