from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass
from typing import Any, Callable, Literal
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from shg_spectral.errors import NotTameError, TrackingLossError
from shg_spectral.jacobi.abel import MAX_TURN, AbelState, abel_origin, advance
from shg_spectral.jacobi.curve import FiniteGenusCurve, make_curve, widest_gaps
from shg_spectral.jacobi.periods import DualFormBasis, dual_forms
from shg_spectral.potential import PeriodicPotential, evolve_y, translate_x
from shg_spectral.run_config import RunConfig, get_run_config
from shg_spectral.spectral.divisor import find_branch_points, find_divisor, is_tame, require_regular, track_divisor
from shg_spectral.utils.utility_classes import SpectralDivisor


logger = logging.getLogger(__name__)

# y-evolution steps per unit height
Y_STEPS_PER_UNIT = 2000
# x-step used to orient the coordinates in the y-flow check
ORIENTATION_STEP = 1 / 64


@dataclass(frozen=True)
class FlowReport:
    """
    Abel coordinates of the divisor along a translation flow and their linear fits.

    Attributes:
        - direction (str): 'x' or 'y'.
        - samples (NDArray[np.float64]): Flow parameters.
        - labels (list[int]): Gap labels, one coordinate per gap.
        - phi (NDArray[np.complex128]): Coordinates, shape (len(samples), g).
        - slopes (NDArray[np.complex128]): Fitted slopes per coordinate.
        - intercepts (NDArray[np.complex128]): Fitted intercepts.
        - residuals (NDArray[np.float64]): Max fit deviation over the coordinate range.
        - windings (dict[int, int]): Completed turns of every entry around its gap.
        - lattice_distance (float | None): Distance of φ(end) - φ(start) to Γ (x-flow over a full period only).
        - orientation (NDArray[np.float64] | None): Signs making the x-slope of each coordinate follow its label (y-flow only).
    """
    direction: Literal['x', 'y']
    samples: NDArray[np.float64]
    labels: list[int]
    phi: NDArray[np.complex128]
    slopes: NDArray[np.complex128]
    intercepts: NDArray[np.complex128]
    residuals: NDArray[np.float64]
    windings: dict[int, int]
    lattice_distance: float | None = None
    orientation: NDArray[np.float64] | None = None

    @property
    def genus(self) -> int:
        return len(self.labels)

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max(initial=0.0))

    @property
    def sign_pattern_ok(self) -> bool | None:
        """Im of the oriented y-slopes is negative, as for the leading term -i|n|."""
        if self.orientation is None:
            return None
        return bool(np.all((self.orientation * self.slopes).imag < 0))

    def to_rows(self) -> list[tuple[float, int, float, float]]:
        """CSV rows (t, n, Re φ_n, Im φ_n)."""
        return [(float(t), int(k), float(value.real), float(value.imag))
                for t, row in zip(self.samples, self.phi) for k, value in zip(self.labels, row)]

    def summary(self) -> dict[str, Any]:
        return {
            'direction': self.direction,
            'genus': self.genus,
            'labels': list(self.labels),
            'slopes': {str(k): [s.real, s.imag] for k, s in zip(self.labels, self.slopes)},
            'residuals': {str(k): float(r) for k, r in zip(self.labels, self.residuals)},
            'windings': {str(k): w for k, w in self.windings.items()},
            'lattice_distance': self.lattice_distance,
            'sign_pattern_ok': self.sign_pattern_ok,
        }


def linear_fit(t: ArrayLike, values: NDArray[np.complex128]) -> tuple[NDArray[np.complex128], NDArray[np.complex128], NDArray[np.float64]]:
    """
    Complex least-squares fit values ≈ slope·t + intercept per column.

    Returns:
        tuple: (slopes, intercepts, residuals as max deviation over max |values - values[0]|).
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=complex).reshape(len(t), -1)
    A = np.column_stack([t, np.ones_like(t)]).astype(complex)
    coefficients, *_ = np.linalg.lstsq(A, values, rcond=None)
    deviation = np.abs(values - A @ coefficients).max(axis=0, initial=0.0)
    spread = np.abs(values - values[0]).max(axis=0, initial=0.0)
    residuals = np.divide(deviation, spread, out=np.zeros_like(deviation), where=spread > 0)
    return coefficients[0], coefficients[1], residuals


################
# Tracking
################

@dataclass
class _FlowTracker:
    """Continuation of the gap entries along a one-parameter family of potentials."""
    potential_at: Callable[[float], PeriodicPotential]
    curve: FiniteGenusCurve
    basis: DualFormBasis
    config: RunConfig

    def _check_step(self, D0: SpectralDivisor, D1: SpectralDivisor) -> None:
        for gap in self.curve.gaps:
            moved = abs(D1.entry(gap.k).lam - D0.entry(gap.k).lam)
            if moved > gap.width / 4:
                raise TrackingLossError(f"Entry k={gap.k} moved {moved:.3g} in one step", {'k': gap.k})
        if not is_tame(D1, self.config):
            logger.error("Divisor turned non-tame along the flow; the potential is singular there")
            raise NotTameError("Divisor is not tame along the flow", {'labels': list(D1.labels)})

    def step(self, t0: float, t1: float, D: SpectralDivisor, state: AbelState, depth: int = 0) -> tuple[SpectralDivisor, AbelState]:
        """
        Advance from t0 to t1, halving the step when an entry moves more than a quarter of its gap.

        Raises:
            TrackingLossError: If the step is still rejected after subdivision_depth halvings.
        """
        try:
            D1 = track_divisor(self.potential_at(t1), D, self.curve.labels, self.config)
            self._check_step(D, D1)
            return D1, advance(state, self.curve, self.basis, D1, max_turn=MAX_TURN)
        except TrackingLossError as err:
            if depth >= self.config.subdivision_depth:
                logger.error(f"Tracking lost between t={t0:.6g} and t={t1:.6g}")
                raise TrackingLossError(f"Tracking lost between t={t0:.6g} and t={t1:.6g}; refine the samples", {'t0': t0, 't1': t1, **err.report}) from err
            logger.debug(f"Halving flow step [{t0:.6g}, {t1:.6g}]")
            middle = (t0 + t1) / 2
            D_mid, state_mid = self.step(t0, middle, D, state, depth + 1)
            return self.step(middle, t1, D_mid, state_mid, depth + 1)

    def run(self, samples: NDArray[np.float64], D0: SpectralDivisor) -> tuple[NDArray[np.complex128], AbelState]:
        state = abel_origin(self.curve, self.basis, D0)
        phi = [state.vector]
        D = D0
        for t0, t1 in zip(samples[:-1], samples[1:]):
            D, state = self.step(float(t0), float(t1), D, state)
            phi.append(state.vector)
        return np.array(phi, dtype=complex).reshape(len(samples), self.curve.genus), state


def _sample_grid(samples: int | ArrayLike, stop: float) -> NDArray[np.float64]:
    if np.isscalar(samples):
        if int(samples) < 2:
            raise ValueError(f"At least 2 flow samples are needed, got {samples}")
        return np.linspace(0.0, stop, int(samples))
    grid = np.asarray(samples, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("Flow samples must be a 1-D array of at least 2 values.")
    return grid

def _flow_setup(p: PeriodicPotential, N_gaps: int, K: int, config: RunConfig) -> tuple[FiniteGenusCurve, DualFormBasis, SpectralDivisor] | None:
    """Model curve on the N_gaps widest gaps and the starting divisor, or None when every gap is closed."""
    B = find_branch_points(p, K, config)
    labels = widest_gaps(B, N_gaps)
    if not labels:
        logger.info("All gaps closed: genus 0, the flow is trivial")
        return None
    curve = make_curve(B, labels, config)
    basis = dual_forms(curve, config=config)
    D = find_divisor(p, K, config)
    if not is_tame(D, config):
        logger.error("Flow check needs a tame starting divisor")
        raise NotTameError("Starting divisor is not tame", {'K': K})
    D = D.restrict(labels)
    require_regular(p, D, config)
    return curve, basis, D

def _trivial_report(direction: Literal['x', 'y'], samples: NDArray[np.float64]) -> FlowReport:
    empty = np.zeros(0, dtype=complex)
    return FlowReport(direction, samples, [], np.zeros((len(samples), 0), dtype=complex), empty, empty, np.zeros(0), {},
                      0.0 if direction == 'x' else None, np.zeros(0) if direction == 'y' else None)

def flow_x_check(p: PeriodicPotential, N_gaps: int, x_samples: int | ArrayLike = 33, K: int | None = None, config: RunConfig | None = None) -> FlowReport:
    """
    Abel coordinates of the divisor of p(· + x), x over the samples, on the model of the N_gaps widest gaps.

    The coordinates should move linearly in x. When the samples run over the full period [0, 1],
    φ(1) - φ(0) is tested for membership in the period lattice.

    Raises:
        TrackingLossError: If an entry cannot be followed between samples.
        NotTameError: If the divisor turns non-tame along the flow.
        SingularPointError: If a tracked entry sits on a singular point of the curve.
    """
    config = config or get_run_config()
    K = config.K if K is None else K
    samples = _sample_grid(x_samples, 1.0)
    setup = _flow_setup(p, N_gaps, K, config)
    if setup is None:
        return _trivial_report('x', samples)
    curve, basis, D0 = setup

    logger.info(f"x-flow over {len(samples)} samples on gaps {curve.labels}")
    tracker = _FlowTracker(lambda x: translate_x(p, x), curve, basis, config)
    phi, state = tracker.run(samples, D0)
    slopes, intercepts, residuals = linear_fit(samples, phi)
    full_period = np.isclose(samples[0], 0.0) and np.isclose(samples[-1], 1.0)
    lattice_distance = state.lattice.distance(phi[-1] - phi[0]) if full_period else None
    report = FlowReport('x', samples, list(curve.labels), phi, slopes, intercepts, residuals, state.windings, lattice_distance)
    logger.info(f"x-flow: max residual {report.max_residual:.3g}, windings {report.windings}")
    return report

def _orientation(p: PeriodicPotential, curve: FiniteGenusCurve, basis: DualFormBasis, D0: SpectralDivisor, config: RunConfig) -> NDArray[np.float64]:
    """Signs s_n with s_n·Re(∂φ_n/∂x) of the sign of n, from one short x-step."""
    tracker = _FlowTracker(lambda x: translate_x(p, x), curve, basis, config)
    _, state = tracker.step(0.0, ORIENTATION_STEP, D0, abel_origin(curve, basis, D0))
    label_signs = np.array([1.0 if k >= 0 else -1.0 for k in curve.labels])
    return np.where(state.vector.real >= 0, 1.0, -1.0) * label_signs

def flow_y_check(p: PeriodicPotential, N_gaps: int, y_samples: int | ArrayLike = 11, K: int | None = None, y_max: float = 0.05,
                 filter_cutoff: int | None = None, config: RunConfig | None = None) -> FlowReport:
    """
    Abel coordinates of the divisor of the Cauchy data evolved to height y, on the model of the N_gaps widest gaps.

    The coordinates are oriented by a short x-step so that their x-slopes follow the sign of the
    label; the oriented y-slopes should then have negative imaginary parts.

    Raises:
        BlowUpError: If the y-evolution leaves its validity range.
        TrackingLossError: If an entry cannot be followed between samples.
    """
    config = config or get_run_config()
    K = config.K if K is None else K
    samples = _sample_grid(y_samples, y_max)
    setup = _flow_setup(p, N_gaps, K, config)
    if setup is None:
        return _trivial_report('y', samples)
    curve, basis, D0 = setup
    cutoff = p.J if filter_cutoff is None else filter_cutoff

    def _potential_at(y: float) -> PeriodicPotential:
        return evolve_y(p, y, max(1, int(np.ceil(abs(y) * Y_STEPS_PER_UNIT))), cutoff, config)

    D_start = D0
    if not np.isclose(samples[0], 0.0):
        D_start = track_divisor(_potential_at(float(samples[0])), D0, curve.labels, config)
    logger.info(f"y-flow over {len(samples)} samples on gaps {curve.labels}")
    tracker = _FlowTracker(_potential_at, curve, basis, config)
    phi, state = tracker.run(samples, D_start)
    slopes, intercepts, residuals = linear_fit(samples, phi)
    orientation = _orientation(p, curve, basis, D0, config)
    report = FlowReport('y', samples, list(curve.labels), phi, slopes, intercepts, residuals, state.windings, None, orientation)
    logger.info(f"y-flow: max residual {report.max_residual:.3g}, sign pattern {'ok' if report.sign_pattern_ok else 'violated'}")
    return report
