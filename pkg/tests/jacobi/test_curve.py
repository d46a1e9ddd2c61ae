import numpy as np
import pytest

from shg_spectral.errors import PeriodMatrixError
from shg_spectral.jacobi.curve import Gap, gap_size, make_curve, make_curve_from_gaps, ray_clear_of, segments_cross, widest_gaps
from shg_spectral.utils.utility_classes import BranchPair, BranchPointSet


SAMPLES = np.array([1.0 + 2j, -3.0 + 0.5j, 10.0 - 4j, 0.2 + 0.1j, 30.0 + 1j])


@pytest.fixture
def genus_two():
    return make_curve_from_gaps([Gap(1, 3.0, 5.0), Gap(2, 20.0, 24.0)])

def test_joukowski_round_trip():
    gap = Gap(1, 3.0 + 1j, 5.0 - 0.5j)
    w = np.array([1.5 * np.exp(0.3j), 2.0j, -1.2 + 0.4j])
    w_out, w_in = gap.inverse_joukowski(gap.joukowski(w))
    assert np.allclose(w_out, w)
    assert np.allclose(w_in, 1 / w)
    assert np.allclose(gap.factor(gap.joukowski(w)), gap.half_width * (w - 1 / w) / 2)

def test_model_squares_to_the_polynomial(genus_two):
    assert genus_two.genus == 2
    assert genus_two.residual(SAMPLES) < 1e-12
    upper, lower = genus_two.sheet_values(SAMPLES)
    assert np.allclose(upper, -lower)
    assert genus_two.y([genus_two.reference_point])[0].real > 0

def test_local_y_matches_y_off_the_cut(genus_two):
    gap = genus_two.gaps[0]
    w = np.array([1.7 * np.exp(1j * t) for t in (0.4, 2.0, -1.1)])
    assert np.allclose(genus_two.local_y(0, w), genus_two.y(gap.joukowski(w)))
    assert np.allclose(genus_two.local_y(0, 1 / w), -genus_two.y(gap.joukowski(w)))

def test_genus_zero_model():
    curve = make_curve_from_gaps([])
    assert curve.genus == 0
    assert np.allclose(curve.y([4.0])[0], 2.0)
    assert curve.residual(SAMPLES) < 1e-14

def test_cut_direction_avoids_gaps():
    assert not ray_clear_of([Gap(0, -1.5 + 0.1j, -0.5 - 0.1j)], np.pi)
    curve = make_curve_from_gaps([Gap(0, -1.5 + 0.1j, -0.5 - 0.1j)])
    assert curve.cut_angle != np.pi
    assert curve.residual(SAMPLES) < 1e-12

def test_segments():
    assert segments_cross(0, 2, 1 - 1j, 1 + 1j)
    assert not segments_cross(0, 1, 2 - 1j, 2 + 1j)
    assert segments_cross(0, 1, 1, 2 + 1j)

def test_invalid_layouts():
    with pytest.raises(PeriodMatrixError):
        make_curve_from_gaps([Gap(1, 3.0, 5.0), Gap(2, 4.0 - 1j, 4.0 + 1j)])
    with pytest.raises(PeriodMatrixError):
        make_curve_from_gaps([Gap(0, -1.0 + 0.5j, 1.0 - 0.5j)])
    with pytest.raises(ValueError):
        make_curve_from_gaps([Gap(1, 3.0, 3.0)])

def test_make_curve_from_branch_points():
    B = BranchPointSet((BranchPair(1, 150.0, 152.0), BranchPair(2, 630.0, 630.0, True), BranchPair(-1, 0.006, 0.0065)), 2)
    curve = make_curve(B, [1, -1])
    assert curve.labels == [-1, 1]
    with pytest.raises(ValueError):
        make_curve(B, [2])
    with pytest.raises(ValueError):
        make_curve(B, [5])

def test_widest_gaps_in_zeta_scale():
    B = BranchPointSet((BranchPair(1, 149.0, 151.0), BranchPair(2, 625.0, 630.0), BranchPair(3, 1400.0, 1400.0, True)), 3)
    assert gap_size(B.pair(2)) > gap_size(B.pair(1))
    assert widest_gaps(B, 1) == [2]
    assert widest_gaps(B, 5) == [1, 2]
    assert widest_gaps(B, 0) == []
    # λ -> 1/λ maps a gap to one of the same size
    mirrored = BranchPair(-1, 1 / 151.0, 1 / 149.0)
    assert gap_size(mirrored) == pytest.approx(gap_size(B.pair(1)), rel=1e-2)
