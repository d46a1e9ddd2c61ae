import numpy as np
import pytest

from shg_spectral.jacobi.flows import FlowReport, flow_x_check, flow_y_check, linear_fit
from shg_spectral.potential import cosine_potential, make_potential, vacuum


def test_linear_fit_is_exact_on_lines():
    t = np.linspace(0, 1, 9)
    values = np.column_stack([(0.5 - 2j) * t + 1j, 3.0 * t])
    slopes, intercepts, residuals = linear_fit(t, values)
    assert np.allclose(slopes, [0.5 - 2j, 3.0])
    assert np.allclose(intercepts, [1j, 0.0])
    assert np.all(residuals < 1e-12)

def test_linear_fit_of_constant_column():
    t = np.linspace(0, 1, 5)
    _, _, residuals = linear_fit(t, np.ones((5, 1), dtype=complex))
    assert residuals.tolist() == [0.0]

def _report(slopes, orientation):
    samples = np.linspace(0, 0.05, 3)
    slopes = np.asarray(slopes, dtype=complex)
    phi = samples[:, None] * slopes[None, :]
    return FlowReport('y', samples, [-1, 1], phi, slopes, np.zeros(2, dtype=complex), np.zeros(2), {-1: 0, 1: 0},
                      None, None if orientation is None else np.asarray(orientation, dtype=float))

def test_sign_pattern():
    assert _report([0.1 - 1j, -0.2 - 0.5j], [1.0, 1.0]).sign_pattern_ok
    assert _report([0.1 - 1j, -0.2 - 0.5j], [1.0, -1.0]).sign_pattern_ok is False
    assert _report([0.1 - 1j, 0.1 - 1j], None).sign_pattern_ok is None

def test_report_rows_and_summary():
    report = _report([0.1 - 1j, -0.2 - 0.5j], [1.0, 1.0])
    rows = report.to_rows()
    assert len(rows) == 6
    assert rows[0] == (0.0, -1, 0.0, 0.0)
    summary = report.summary()
    assert summary['genus'] == 2
    assert summary['slopes']['1'] == pytest.approx([-0.2, -0.5])

def test_sample_count_is_validated(small_config):
    with pytest.raises(ValueError):
        flow_x_check(vacuum(), 1, 1, config=small_config)

@pytest.mark.slow
def test_vacuum_flow_is_trivial(small_config):
    report = flow_x_check(vacuum(), 2, 5, config=small_config)
    assert report.genus == 0
    assert report.lattice_distance == 0.0
    y_report = flow_y_check(vacuum(), 2, 3, config=small_config)
    assert y_report.genus == 0

@pytest.mark.slow
def test_cosine_x_flow_is_linear(small_config):
    report = flow_x_check(cosine_potential(0.3), 1, 33, config=small_config)
    assert report.genus == 1
    assert report.max_residual < 1e-3
    assert report.lattice_distance < 1e-3

@pytest.mark.slow
def test_two_gap_x_flow_is_linear(small_config):
    p = make_potential({1: 0.15, -1: 0.15, 2: 0.1, -2: 0.1}, {})
    report = flow_x_check(p, 2, 33, config=small_config)
    assert report.genus == 2
    assert report.max_residual < 1e-3
    assert report.lattice_distance < 1e-3

@pytest.mark.slow
def test_cosine_y_flow_is_linear(small_config):
    report = flow_y_check(cosine_potential(0.3), 1, 11, y_max=0.05, config=small_config)
    assert report.genus == 1
    assert np.all(np.abs(report.samples) <= 0.05)
    assert report.max_residual < 5e-3
    assert report.sign_pattern_ok is True
