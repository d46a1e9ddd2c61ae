import numpy as np
import pytest

from shg_spectral.errors import SheetMatchingError, TrackingLossError
from shg_spectral.jacobi.abel import abel_map, abel_origin, advance, gap_coordinate, gap_path_integral, sheet_ratio
from shg_spectral.jacobi.curve import Gap, make_curve_from_gaps
from shg_spectral.jacobi.periods import dual_forms
from shg_spectral.utils.utility_classes import DivisorEntry, SpectralDivisor


@pytest.fixture
def genus_two():
    return make_curve_from_gaps([Gap(1, 3.0, 5.0), Gap(2, 20.0, 24.0)])

@pytest.fixture
def basis(genus_two, config):
    return dual_forms(genus_two, config=config)

def _entry(curve, j, w, ratio=1.0):
    """Divisor entry at Joukowski coordinate w with sheet ratio `ratio` (μ - 1/μ = 2·ratio·y)."""
    gap = curve.gaps[j]
    lam = complex(gap.joukowski([w])[0])
    y = ratio * complex(curve.local_y(j, [w])[0])
    mu = y + np.sqrt(y * y + 1 + 0j)
    return DivisorEntry(gap.k, lam, mu)

def _divisor(curve, ws, ratios=None):
    ratios = ratios or [1.0] * len(ws)
    return SpectralDivisor(tuple(_entry(curve, j, w, r) for j, (w, r) in enumerate(zip(ws, ratios))), K=4)

ORIGIN = [1.5 * np.exp(0.3j), 1.4 * np.exp(-0.5j)]
POINT_A = [1.8 * np.exp(1.2j), 1.3 * np.exp(0.4j)]
POINT_B = [1.2 * np.exp(2.5j), 1.6 * np.exp(-1.1j)]


def test_synthetic_entries_have_unit_ratio(genus_two):
    entry = _entry(genus_two, 0, ORIGIN[0])
    assert sheet_ratio(genus_two, 0, entry, ORIGIN[0]) == pytest.approx(1.0)
    w, ratio = gap_coordinate(genus_two, 0, entry, None, None)
    assert w == pytest.approx(ORIGIN[0])
    assert ratio == pytest.approx(1.0)

def test_abel_map_of_origin_is_zero(genus_two, basis):
    D_o = _divisor(genus_two, ORIGIN)
    state = abel_map(genus_two, basis, D_o, D_o)
    assert np.array_equal(state.vector, np.zeros(2, dtype=complex))
    assert state.windings == {1: 0, 2: 0}
    assert state.sheets == {1: 1, 2: 1}

@pytest.mark.parametrize('j, k', [(0, 1), (1, 2)])
def test_full_turn_adds_an_a_period(genus_two, basis, j, k):
    D_o = _divisor(genus_two, ORIGIN)
    state = abel_map(genus_two, basis, D_o, D_o, turns={k: 1})
    assert np.allclose(state.vector, np.eye(2)[j], atol=1e-9)
    assert state.windings[k] == 1
    assert state.lattice_distance() < 1e-9

def test_abel_map_is_additive_along_paths(genus_two, basis):
    D_o, D_a, D_b = (_divisor(genus_two, ws) for ws in (ORIGIN, POINT_A, POINT_B))
    oa = abel_map(genus_two, basis, D_a, D_o).vector
    ab = abel_map(genus_two, basis, D_b, D_a).vector
    ob = abel_map(genus_two, basis, D_b, D_o)
    assert ob.lattice.distance(oa + ab - ob.vector) < 1e-9

def test_path_integral_is_reversible(genus_two):
    forward, angle = gap_path_integral(genus_two, 0, ORIGIN[0], POINT_A[0], n_nodes=48)
    backward, back_angle = gap_path_integral(genus_two, 0, POINT_A[0], ORIGIN[0], n_nodes=48)
    assert np.allclose(forward, -backward, atol=1e-12)
    assert angle == pytest.approx(-back_angle)
    assert angle == pytest.approx(0.9)

def test_entry_on_the_other_sheet(genus_two, basis):
    D_o = _divisor(genus_two, ORIGIN)
    inner = [1 / ORIGIN[0], ORIGIN[1]]
    state = abel_map(genus_two, basis, _divisor(genus_two, inner), D_o)
    assert state.sheets == {1: -1, 2: 1}
    assert state.w[0] == pytest.approx(inner[0])

def test_ambiguous_sheet_is_rejected(genus_two, basis):
    D_o = _divisor(genus_two, ORIGIN)
    with pytest.raises(SheetMatchingError):
        abel_map(genus_two, basis, _divisor(genus_two, POINT_A, [1j, 1.0]), D_o)

def test_large_step_is_reported(genus_two, basis):
    D_o = _divisor(genus_two, ORIGIN)
    state = abel_origin(genus_two, basis, D_o)
    with pytest.raises(TrackingLossError):
        advance(state, genus_two, basis, _divisor(genus_two, POINT_B), max_turn=np.pi / 2)
