from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass, replace
from typing import Mapping
import logging

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike, NDArray

from shg_spectral.errors import SheetMatchingError, TrackingLossError
from shg_spectral.jacobi.curve import FiniteGenusCurve
from shg_spectral.jacobi.periods import DualFormBasis, PeriodLattice, period_lattice
from shg_spectral.utils.utility_classes import DivisorEntry, SpectralDivisor


logger = logging.getLogger(__name__)

# Preimages w, 1/w closer than this are treated as the branch point itself
BRANCH_SEPARATION = 1e-4
# Sheet ratios with |Re(r/r_ref)| below this fraction of |r/r_ref| are ambiguous
SHEET_AMBIGUITY = 0.25
# Largest turn of the Joukowski angle accepted in one tracking step
MAX_TURN = np.pi / 2


def lattice_reduce(v: ArrayLike, lattice: PeriodLattice) -> tuple[NDArray[np.complex128], NDArray[np.int_]]:
    """Representative of v modulo Γ with bounded coefficients, and the removed lattice coefficients."""
    return lattice.reduce(v)


################
# Points of the curve in gap coordinates
################

def sheet_ratio(curve: FiniteGenusCurve, j: int, entry: DivisorEntry, w: complex) -> complex:
    """(μ - Δ(λ)/2)/y at the divisor point, with Δ(λ) = μ + 1/μ on the curve and y read at w."""
    return complex((entry.mu - 1 / entry.mu) / 2 / curve.local_y(j, [w])[0])

def gap_coordinate(curve: FiniteGenusCurve, j: int, entry: DivisorEntry, reference_ratio: complex | None, reference_w: complex | None) -> tuple[complex, complex]:
    """
    Joukowski coordinate w of a divisor point on gap j, with its sheet ratio.

    The preimage is chosen so that the sheet ratio continues the reference ratio; without
    reference the outer preimage |w| >= 1 is taken. Next to the branch points the nearest
    preimage to reference_w is taken.

    Raises:
        SheetMatchingError: If both preimages continue the reference ratio equally well.
    """
    gap = curve.gaps[j]
    w_out, w_in = (complex(w[0]) for w in gap.inverse_joukowski([entry.lam]))
    if abs(w_out - w_in) < BRANCH_SEPARATION:
        w = w_out if reference_w is None or abs(w_out - reference_w) <= abs(w_in - reference_w) else w_in
        return w, reference_ratio if reference_ratio is not None else 0j
    ratio_out = sheet_ratio(curve, j, entry, w_out)
    if reference_ratio is None or reference_ratio == 0:
        return w_out, ratio_out
    relative = ratio_out / reference_ratio
    if abs(relative.real) < SHEET_AMBIGUITY * abs(relative):
        logger.error(f"Ambiguous sheet for entry k={entry.k} at λ={entry.lam}")
        raise SheetMatchingError(f"Ambiguous sheet assignment for entry k={entry.k}", {'k': entry.k, 'lambda': [entry.lam.real, entry.lam.imag]})
    return (w_out, ratio_out) if relative.real > 0 else (w_in, -ratio_out)

def gap_path_integral(curve: FiniteGenusCurve, j: int, w0: complex, w1: complex, turns: int = 0, n_nodes: int = 32) -> tuple[NDArray[np.complex128], float]:
    """
    ∫ λ^i dλ/y along the path from w0 to w1 in the Joukowski coordinate of gap j.

    In v = log w the path is the segment from log w0 to log w1 + 2πi·turns, with the principal angle
    difference; λ^i dλ/y becomes λ^i dv/(y/G_j), analytic across the cut and at its endpoints.

    Returns:
        tuple: (integrals over i = 0..g-1, total angle turned).
    """
    g = curve.genus
    gap = curve.gaps[j]
    v0 = np.log(w0)
    dv = np.log(w1 / w0) + 2j * np.pi * turns
    if dv == 0:
        return np.zeros(g, dtype=complex), 0.0
    x, weights = leggauss(n_nodes)
    v = v0 + dv * (x + 1) / 2
    lam = gap.joukowski(np.exp(v))
    integrand = lam[:, None] ** np.arange(g)[None, :] / curve.reduced(j, lam)[:, None]
    return (weights * dv / 2) @ integrand, float(dv.imag)


################
# Abel map
################

@dataclass(frozen=True)
class AbelState:
    """
    Abel coordinates of a divisor relative to a base divisor, with the path bookkeeping.

    Attributes:
        - origin (SpectralDivisor): Base divisor D^o.
        - labels (tuple[int, ...]): Gap labels, one tracked entry per gap.
        - vector (NDArray[np.complex128]): Σ_j ∫_{γ_j} ω_n, in ℂ^g.
        - w (NDArray[np.complex128]): Current Joukowski coordinates of the entries.
        - ratios (NDArray[np.complex128]): Current sheet ratios.
        - angles (NDArray[np.float64]): Joukowski angle turned by each entry since the origin.
        - lattice (PeriodLattice): Period lattice Γ.
    """
    origin: SpectralDivisor
    labels: tuple[int, ...]
    vector: NDArray[np.complex128]
    w: NDArray[np.complex128]
    ratios: NDArray[np.complex128]
    angles: NDArray[np.float64]
    lattice: PeriodLattice

    @property
    def windings(self) -> dict[int, int]:
        """Completed turns of each entry around its gap."""
        return {k: int(np.rint(angle / (2 * np.pi))) for k, angle in zip(self.labels, self.angles)}

    @property
    def sheets(self) -> dict[int, int]:
        """+1 for entries on the normalized sheet (|w| >= 1), -1 otherwise."""
        return {k: 1 if abs(w) >= 1 else -1 for k, w in zip(self.labels, self.w)}

    def reduced(self) -> tuple[NDArray[np.complex128], NDArray[np.int_]]:
        return lattice_reduce(self.vector, self.lattice)

    def lattice_distance(self) -> float:
        return self.lattice.distance(self.vector)


def abel_origin(curve: FiniteGenusCurve, basis: DualFormBasis, D_origin: SpectralDivisor) -> AbelState:
    """Zero state at the base divisor; each gap entry is placed on the normalized sheet."""
    w, ratios = [], []
    for j, k in enumerate(curve.labels):
        wj, rj = gap_coordinate(curve, j, D_origin.entry(k), None, None)
        w.append(wj)
        ratios.append(rj)
    g = curve.genus
    return AbelState(D_origin, tuple(curve.labels), np.zeros(g, dtype=complex), np.array(w, dtype=complex),
                     np.array(ratios, dtype=complex), np.zeros(g), period_lattice(basis))

def advance(state: AbelState, curve: FiniteGenusCurve, basis: DualFormBasis, D: SpectralDivisor, turns: Mapping[int, int] | None = None,
            max_turn: float | None = None) -> AbelState:
    """
    Move every gap entry of the state to its position in D and add the path integrals.

    Args:
        state (AbelState): Current state.
        curve (FiniteGenusCurve): Finite-genus model.
        basis (DualFormBasis): Normalized forms.
        D (SpectralDivisor): Target divisor, containing every gap label.
        turns (Mapping[int, int] | None): Extra full turns around the gap per label.
        max_turn (float | None): Largest Joukowski angle allowed per entry, None for no limit.

    Raises:
        SheetMatchingError: If a sheet cannot be assigned.
        TrackingLossError: If an entry turns more than max_turn.
    """
    turns = turns or {}
    candidate = np.zeros((curve.genus, curve.genus), dtype=complex)
    w_new, ratios, angles = state.w.copy(), state.ratios.copy(), state.angles.copy()
    for j, k in enumerate(state.labels):
        entry = D.entry(k)
        wj, rj = gap_coordinate(curve, j, entry, complex(state.ratios[j]), complex(state.w[j]))
        integral, angle = gap_path_integral(curve, j, complex(state.w[j]), wj, turns.get(k, 0), basis.n_nodes)
        if max_turn is not None and abs(angle) > max_turn:
            logger.debug(f"Entry k={k} turned {angle:.3f} rad in one step")
            raise TrackingLossError(f"Entry k={k} moved too far along its gap", {'k': k, 'angle': angle})
        candidate[j] = integral
        w_new[j] = wj
        if rj != 0:
            ratios[j] = rj
        angles[j] += angle
    vector = state.vector + basis.normalize(candidate.sum(axis=0))
    return replace(state, vector=vector, w=w_new, ratios=ratios, angles=angles)

def abel_map(curve: FiniteGenusCurve, basis: DualFormBasis, D: SpectralDivisor, D_origin: SpectralDivisor,
             turns: Mapping[int, int] | None = None) -> AbelState:
    """
    Abel coordinates φ(D) - φ(D^o): path integrals of the ω_n from the origin entries to the target entries.

    Each path stays in the Joukowski annulus of its gap and turns by the principal angle plus the
    requested whole turns. The result carries the lattice reduction through AbelState.reduced().

    Raises:
        SheetMatchingError: If a divisor point cannot be assigned to a sheet.
    """
    state = abel_origin(curve, basis, D_origin)
    result = advance(state, curve, basis, D, turns)
    logger.debug(f"Abel map over gaps {curve.labels}: windings {result.windings}")
    return result
