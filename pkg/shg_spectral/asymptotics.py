from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping
import logging

import numpy as np
from numpy.typing import NDArray
from scipy.stats import linregress

from shg_spectral.monodromy import lambda_k0, monodromy_array, mu_k0, vacuum_entries, zeta
from shg_spectral.potential import PeriodicPotential, tau_of
from shg_spectral.run_config import RunConfig, get_run_config
from shg_spectral.spectral.annulus import annulus_samples
from shg_spectral.spectral.metric import l2_weight
from shg_spectral.utils.json_utils import dumps_exact, format_float
from shg_spectral.utils.utility_classes import BranchPointSet, SpectralDivisor


logger = logging.getLogger(__name__)

FLOOR_STATUS = 'decay below measurement floor'


################
# Weighted sequence norms
################

@dataclass(frozen=True)
class WeightedSeqNorm:
    """The ℓ²_{n,m} norm: weight k^n for k -> +∞ and |k|^m for k -> -∞."""
    n: int
    m: int

    def weight(self, k: int) -> float:
        return l2_weight(k, self.n, self.m)

    def __call__(self, seq: Mapping[int, complex]) -> float:
        return l2nm_norm(seq, self.n, self.m)


def l2nm_norm(seq: Mapping[int, complex], n: int, m: int) -> float:
    """(Σ_{k<0} |k^m a_k|² + |a_0|² + Σ_{k>0} |k^n a_k|²)^{1/2} over the available indices."""
    if not seq:
        return 0.0
    weighted = np.array([l2_weight(k, n, m) * abs(a) for k, a in seq.items()], dtype=float)
    return float(np.sqrt(np.sum(weighted**2)))

def jac_weighted_norms(coords: Mapping[int, complex], B: BranchPointSet) -> dict[str, float]:
    """
    Norms of a coordinate sequence (a_n) in the two Jacobi coordinate spaces,
    ‖a_n (κ_{n,1} - κ_{n,2})‖ in ℓ²_{-1,3} and in the extended ℓ²_{-2,2}.
    """
    weighted = {n: a * (B.pair(n).kappa1 - B.pair(n).kappa2) for n, a in coords.items()}
    return {'jac': l2nm_norm(weighted, -1, 3), 'jac_extended': l2nm_norm(weighted, -2, 2)}


################
# Bounding sequences
################

@dataclass(frozen=True)
class BoundingSequence:
    """
    Bounding sequence (a_k) of f with exponential type s on sampled annuli.

    Attributes:
        - s (float): Exponential type.
        - values (dict[int, float]): a_k = max |f| e^{-s|Im ζ|} over the samples of S_k.
        - refined (dict[int, float]): The same maximum on twice as many angles.
        - violations (int): Refined samples exceeding the coarse a_k.
        - radii, angles (int): Sampling per annulus.
    """
    s: float
    values: dict[int, float]
    refined: dict[int, float]
    violations: int
    radii: int
    angles: int

    def norm(self, n: int = 0, m: int = 0) -> float:
        return l2nm_norm(self.values, n, m)

    def restrict(self, labels: list[int]) -> dict[int, float]:
        return {k: self.values[k] for k in labels if k in self.values}


def _bound_values(values: NDArray[np.complex128], lams: NDArray[np.complex128], s: float) -> NDArray[np.float64]:
    return np.abs(values) * np.exp(-s * np.abs(np.imag(np.atleast_1d(zeta(lams)))))

def _sample_points(K: int, radii: int, angles: int, config: RunConfig) -> tuple[list[int], list[NDArray[np.complex128]]]:
    labels = list(range(-K, K + 1))
    return labels, [annulus_samples(k, radii, angles, config) for k in labels]

def bounding_sequence(f_sampler: Callable[[NDArray[np.complex128]], NDArray[np.complex128]], s: float, K: int, samples_per_annulus: tuple[int, int] | None = None, config: RunConfig | None = None) -> BoundingSequence:
    """
    Bounding sequence of f for the exponential type s: |f(λ)| <= a_k e^{s|Im ζ(λ)|} on the samples of S_k.

    Args:
        f_sampler (Callable): Vectorized function of λ.
        s (float): Exponential type, >= 0.
        K (int): Annuli |k| <= K.
        samples_per_annulus (tuple[int, int] | None): (radii, angles), default from config.

    Returns:
        BoundingSequence: Coarse values, 2x-angle refinement and refinement violations.
    """
    config = config or get_run_config()
    if s < 0:
        raise ValueError(f"Exponential type must be >= 0, got {s}")
    radii, angles = samples_per_annulus or (config.annulus_radii, config.annulus_angles)
    labels, coarse_pts = _sample_points(K, radii, angles, config)
    _, fine_pts = _sample_points(K, radii, 2 * angles, config)

    values, refined, violations = {}, {}, 0
    for k, coarse, fine in zip(labels, coarse_pts, fine_pts):
        a_k = float(_bound_values(np.asarray(f_sampler(coarse)), coarse, s).max())
        fine_vals = _bound_values(np.asarray(f_sampler(fine)), fine, s)
        values[k] = a_k
        refined[k] = float(fine_vals.max())
        violations += int(np.sum(fine_vals > a_k * (1 + 1e-12)))
    if violations:
        logger.debug(f"Bounding sequence refinement: {violations} samples above the coarse bound")
    return BoundingSequence(float(s), values, refined, violations, radii, angles)


################
# Monodromy asymptotics
################

@dataclass(frozen=True)
class ThmMReport:
    """
    Comparison of M with the vacuum monodromy.

    Attributes:
        - K (int): Truncation radius of the sampled annuli.
        - tau (complex): τ = e^{-u(0)/2}.
        - norms (dict[str, float]): Weighted norms per comparison ('a', 'd', 'b_inf', 'b_zero', 'c_inf', 'c_zero')
          and the combined 'b', 'c'.
        - tables (dict[str, dict[int, float]]): Bounding sequences per comparison.
        - weights (dict[str, dict[int, float]]): Weight of every k per comparison.
    """
    K: int
    tau: complex
    norms: dict[str, float]
    tables: dict[str, dict[int, float]]
    weights: dict[str, dict[int, float]] = field(default_factory=dict)


# (entry, τ power, side, ℓ² weight exponent) per comparison; side +1 is k > 0, -1 is k < 0, 0 both
_THM_M_TERMS: dict[str, tuple[int, int, int, int]] = {
    'a': (0, 0, 0, 0),
    'd': (3, 0, 0, 0),
    'b_inf': (1, -1, 1, 1),
    'b_zero': (1, 1, -1, -1),
    'c_inf': (2, 1, 1, -1),
    'c_zero': (2, -1, -1, 1),
}

def thm_M_report(p: PeriodicPotential, K: int, s: float = 1.0, config: RunConfig | None = None) -> ThmMReport:
    """
    Bounding sequences of a - a0, d - d0 (ℓ²_{0,0}), b - τ^{∓1} b0 and c - τ^{±1} c0 (split weights at ∞ and 0).

    At the ∞ end (k > 0) b - τ^{-1} b0 is weighted by k and c - τ c0 by k^{-1}; at the 0 end (k < 0)
    b - τ b0 is weighted by |k|^{-1} and c - τ^{-1} c0 by |k|.

    Args:
        p (PeriodicPotential): The potential.
        K (int): Annuli |k| <= K are sampled.
        s (float): Exponential type.

    Returns:
        ThmMReport: Norms and per-k tables.
    """
    config = config or get_run_config()
    tau = tau_of(p)
    labels, pts = _sample_points(K, config.annulus_radii, config.annulus_angles, config)
    all_pts = np.concatenate(pts)
    M = monodromy_array(p, all_pts, config)
    vac = vacuum_entries(all_pts)
    entries = [M[:, 0, 0], M[:, 0, 1], M[:, 1, 0], M[:, 1, 1]]
    bounds = np.cumsum([0] + [len(x) for x in pts])

    tables: dict[str, dict[int, float]] = {}
    weights: dict[str, dict[int, float]] = {}
    norms: dict[str, float] = {}
    for name, (index, power, side, exponent) in _THM_M_TERMS.items():
        deviation = _bound_values(entries[index] - tau**power * vac[index], all_pts, s)
        chosen = [k for k in labels if side == 0 or np.sign(k) == side]
        tables[name] = {k: float(deviation[bounds[i]:bounds[i + 1]].max()) for i, k in enumerate(labels) if k in chosen}
        weights[name] = {k: float(abs(k)) ** exponent if k else 1.0 for k in chosen}
        norms[name] = float(np.sqrt(sum((weights[name][k] * tables[name][k]) ** 2 for k in chosen)))
    norms['b'] = float(np.hypot(norms['b_inf'], norms['b_zero']))
    norms['c'] = float(np.hypot(norms['c_inf'], norms['c_zero']))
    logger.info(f"Monodromy asymptotics K={K}: " + ', '.join(f"{k}={v:.3g}" for k, v in norms.items()))
    return ThmMReport(K, tau, norms, tables, weights)


################
# Spectral data asymptotics
################

@dataclass(frozen=True)
class ThmSpectralReport:
    """Weighted deviations of divisor and branch points from the vacuum nodes."""
    K: int
    norms: dict[str, float]
    tables: dict[str, dict[int, float]]


def thm_spectral_report(D: SpectralDivisor, B: BranchPointSet) -> ThmSpectralReport:
    """
    Norms of λ_k - λ_{k,0} and κ_{k,ν} - λ_{k,0} in ℓ²_{-1,3}, of μ_k - μ_{k,0} in ℓ²_{0,0}, and of the
    gap widths κ_{k,1} - κ_{k,2} in the two Jacobi coordinate weights.

    Raises:
        ValueError: If D and B are not aligned (different K or label sets).
    """
    if D.K != B.K:
        logger.error(f"Divisor and branch points have different K: {D.K} vs {B.K}")
        raise ValueError(f"Alignment mismatch: divisor K={D.K}, branch points K={B.K}")
    # merged double entries leave gaps in D, so only D ⊂ B is required
    missing = set(D.labels.tolist()) - set(B.labels.tolist())
    if missing:
        logger.error(f"Divisor labels without branch points: {sorted(missing)}")
        raise ValueError(f"Alignment mismatch: labels {sorted(missing)} have no branch points")

    lam_dev = {e.k: abs(e.lam - lambda_k0(e.k)) for e in D}
    mu_dev = {e.k: abs(e.mu - mu_k0(e.k)) for e in D}
    kappa_dev = {pair.k: float(np.hypot(abs(pair.kappa1 - lambda_k0(pair.k)), abs(pair.kappa2 - lambda_k0(pair.k)))) for pair in B}
    norms = {
        'lambda': l2nm_norm(lam_dev, -1, 3),
        'mu': l2nm_norm(mu_dev, 0, 0),
        'kappa': l2nm_norm(kappa_dev, -1, 3)}
    gap_norms = jac_weighted_norms({pair.k: 1.0 for pair in B}, B)
    norms.update({f'gap_{name}': value for name, value in gap_norms.items()})
    return ThmSpectralReport(D.K, norms, {'lambda': lam_dev, 'mu': mu_dev, 'kappa': kappa_dev})


################
# Exponential decay
################

@dataclass(frozen=True)
class DecayFit:
    """Log-linear fit log q_n = log C - r |n| on one side."""
    rate: float
    constant: float
    r_squared: float
    n_points: int
    residuals: dict[int, float]
    expected_rate: float | None = None


@dataclass(frozen=True)
class ExpDecayReport:
    """
    Exponential decay of gap widths, divisor-to-gap distances and |μ_n - (-1)^n|.

    Attributes:
        - fits (dict[str, DecayFit | None]): Fit for n > 0 per quantity ('gap', 'center', 'mu'); None if floor-limited.
        - fits_negative (dict[str, DecayFit | None]): The same for n < 0.
        - values (dict[str, dict[int, float]]): Measured quantities.
        - status (str): 'ok' or 'decay below measurement floor'.
        - y0_hint (float | None): Strip half height used for the expected rates 2πy0, 2πy0, πy0.
    """
    fits: dict[str, DecayFit | None]
    fits_negative: dict[str, DecayFit | None]
    values: dict[str, dict[int, float]]
    status: str
    n_min: int
    y0_hint: float | None = None

    def rate_agreement(self) -> float | None:
        """Relative difference of the gap and center rates."""
        gap, center = self.fits.get('gap'), self.fits.get('center')
        if gap is None or center is None:
            return None
        return abs(gap.rate - center.rate) / max(abs(gap.rate), abs(center.rate))


def _fit_decay(values: Mapping[int, float], floors: Mapping[int, float], n_min: int, expected: float | None) -> DecayFit | None:
    usable = {n: v for n, v in values.items() if abs(n) >= n_min and v > floors[n]}
    if len(usable) < 3:
        return None
    n_abs = np.array([abs(n) for n in usable], dtype=float)
    logs = np.log(np.array(list(usable.values())))
    fit = linregress(n_abs, logs)
    residuals = {n: float(logs[i] - (fit.intercept + fit.slope * n_abs[i])) for i, n in enumerate(usable)}
    return DecayFit(float(-fit.slope), float(np.exp(fit.intercept)), float(fit.rvalue**2), len(usable), residuals, expected)

def exp_decay_report(D: SpectralDivisor, B: BranchPointSet, y0_hint: float | None = None, n_min: int = 4, floor: float = 1e-12) -> ExpDecayReport:
    """
    Log-linear fits of |κ_{n,1} - κ_{n,2}|, |λ_n - κ_{n,*}| and |μ_n - (-1)^n| against |n| >= n_min.

    Values below floor (relative to 1 + |λ_{n,0}| for the λ quantities) are excluded. When no quantity
    has three usable values the status is 'decay below measurement floor'. With y0_hint the fitted
    rates are compared with 2πy0 (first two quantities) and πy0 (third).
    """
    labels = [e.k for e in D if e.mult == 1 and e.k in set(B.labels.tolist())]
    values = {
        'gap': {n: B.pair(n).width for n in labels},
        'center': {n: abs(D.entry(n).lam - B.pair(n).midpoint) for n in labels},
        'mu': {n: abs(D.entry(n).mu - mu_k0(n)) for n in labels}}
    lam_floors = {n: floor * (1 + abs(lambda_k0(n))) for n in labels}
    floors = {'gap': lam_floors, 'center': lam_floors, 'mu': {n: floor for n in labels}}
    expected = {'gap': 2 * np.pi * y0_hint, 'center': 2 * np.pi * y0_hint, 'mu': np.pi * y0_hint} if y0_hint else {}

    fits, fits_negative = {}, {}
    for name, vals in values.items():
        fits[name] = _fit_decay({n: v for n, v in vals.items() if n > 0}, floors[name], n_min, expected.get(name))
        fits_negative[name] = _fit_decay({n: v for n, v in vals.items() if n < 0}, floors[name], n_min, expected.get(name))

    status = 'ok'
    if all(f is None for f in fits.values()) and all(f is None for f in fits_negative.values()):
        status = FLOOR_STATUS
        logger.warning("All decay quantities are below the measurement floor.")
    return ExpDecayReport(fits, fits_negative, values, status, n_min, y0_hint)


################
# Tables
################

def _csv_rows(table: Mapping[int, float], weights: Mapping[int, float] | None, weight_of: Callable[[int], float]) -> list[str]:
    rows = ['k,deviation,weight,weighted']
    for k in sorted(table):
        w = weights[k] if weights is not None else weight_of(k)
        rows.append(f"{k},{format_float(table[k])},{format_float(w)},{format_float(w * table[k])}")
    return rows

def write_tables(report: ThmMReport | ThmSpectralReport | ExpDecayReport, out_dir: Path, prefix: str = '') -> list[Path]:
    """
    Write CSV tables (k, deviation, weight, weighted value) and a JSON summary of a report.

    Returns:
        list[Path]: The written files.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def _write(name: str, lines: list[str]) -> None:
        path = out_dir.joinpath(f"{prefix}{name}.csv")
        path.write_text('\n'.join(lines) + '\n')
        written.append(path)

    if isinstance(report, ThmMReport):
        for name, table in report.tables.items():
            _write(name, _csv_rows(table, report.weights.get(name), lambda k: 1.0))
        summary = {'K': report.K, 'tau': report.tau, 'norms': report.norms}
    elif isinstance(report, ThmSpectralReport):
        exponents = {'lambda': (-1, 3), 'mu': (0, 0), 'kappa': (-1, 3)}
        for name, table in report.tables.items():
            n, m = exponents[name]
            _write(name, _csv_rows(table, None, lambda k, n=n, m=m: l2_weight(k, n, m)))
        summary = {'K': report.K, 'norms': report.norms}
    else:
        for name, table in report.values.items():
            _write(f"decay_{name}", _csv_rows(table, None, lambda k: 1.0))
        summary = {
            'status': report.status,
            'n_min': report.n_min,
            'y0_hint': report.y0_hint,
            'fits': {name: _fit_summary(fit) for name, fit in report.fits.items()},
            'fits_negative': {name: _fit_summary(fit) for name, fit in report.fits_negative.items()},
            'rate_agreement': report.rate_agreement()}

    path = out_dir.joinpath(f"{prefix}summary.json")
    path.write_text(dumps_exact(summary))
    written.append(path)
    return written

def _fit_summary(fit: DecayFit | None) -> dict | None:
    if fit is None:
        return None
    return {'rate': fit.rate, 'constant': fit.constant, 'r_squared': fit.r_squared, 'n_points': fit.n_points, 'expected_rate': fit.expected_rate}
