from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass
from typing import Callable, Iterable
import logging

import numpy as np
from numpy.typing import NDArray

from shg_spectral.errors import (
    CountMismatchError, NewtonConvergenceError, SingularPointError, TrackingLossError, ZeroOnContourError)
from shg_spectral.monodromy import lambda_k0, monodromy_array, mu_k0, vacuum_growth, zeta
from shg_spectral.potential import PeriodicPotential, PotentialVariation, add_variation
from shg_spectral.run_config import RunConfig, get_run_config
from shg_spectral.spectral.annulus import annulus_contour, annulus_curve, annulus_index, boundary_curve, local_radius
from shg_spectral.spectral.contour import HolomorphicMap, count_zeros, curve_winding, deflated, newton_refine, taylor_coefficients
from shg_spectral.utils.utility_classes import BranchPair, BranchPointSet, DivisorEntry, SpectralDivisor
from shg_spectral.utils.utils import ordered_map


logger = logging.getLogger(__name__)


################
# Spectral functions of a potential
################

def c_function(p: PeriodicPotential, config: RunConfig) -> HolomorphicMap:
    return lambda lams: monodromy_array(p, lams, config)[:, 1, 0]

def discriminant_function(p: PeriodicPotential, config: RunConfig) -> HolomorphicMap:
    def _delta(lams: NDArray[np.complex128]) -> NDArray[np.complex128]:
        M = monodromy_array(p, lams, config)
        return M[:, 0, 0] + M[:, 1, 1]
    return _delta

def _scan_function(p: PeriodicPotential, config: RunConfig) -> HolomorphicMap:
    """Columns (c, Δ² - 4) from one monodromy evaluation, divided by the vacuum growth and its square."""
    def _scan(lams: NDArray[np.complex128]) -> NDArray[np.complex128]:
        M = monodromy_array(p, lams, config)
        delta = M[:, 0, 0] + M[:, 1, 1]
        growth = vacuum_growth(lams)
        return np.stack([M[:, 1, 0] / growth, (delta**2 - 4) / growth**2], axis=1)
    return _scan

def radial_coordinate(lam: complex) -> float:
    """Signed |ζ|/π, positive outside the unit circle; equals k at λ_{k,0}."""
    r = abs(zeta(lam)) / np.pi
    return r if abs(lam) >= 1 else -r


################
# Counting
################

@dataclass(frozen=True)
class AnnulusCounts:
    """
    Zero counts of c and Δ² - 4 per annulus S_k, |k| <= K.

    Attributes:
        - K (int): Scanned radius.
        - c (dict[int, int]): Zeros of c per label.
        - disc (dict[int, int]): Zeros of Δ² - 4 per label.
    """
    K: int
    c: dict[int, int]
    disc: dict[int, int]

    def total(self, K_inner: int, which: str = 'c') -> int:
        counts = self.c if which == 'c' else self.disc
        return sum(counts[k] for k in range(-K_inner, K_inner + 1))

    def mismatches(self, K_align: int, which: str = 'c') -> dict[str, tuple[int, int]]:
        """Annuli beyond K_align and the inner union whose count differs: {label: (found, expected)}."""
        counts = self.c if which == 'c' else self.disc
        per_annulus = 1 if which == 'c' else 2
        bad = {str(k): (n, per_annulus) for k, n in counts.items() if abs(k) > K_align and n != per_annulus}
        inner = self.total(K_align, which)
        if inner != per_annulus * (2 * K_align + 1):
            bad[f'|k|<={K_align}'] = (inner, per_annulus * (2 * K_align + 1))
        return bad


def annulus_counts(p: PeriodicPotential, K: int, config: RunConfig | None = None) -> AnnulusCounts:
    """
    Argument-principle counts of the zeros of c and Δ² - 4 in every S_k, |k| <= K.

    Neighbouring annuli share their boundary curves, so each level curve is sampled once.
    """
    config = config or get_run_config()
    scan = _scan_function(p, config)
    windings: dict[tuple[int, bool], NDArray[np.int_]] = {}

    def _winding(key: tuple[int, bool]) -> NDArray[np.int_]:
        return curve_winding(scan, boundary_curve(key[0], key[1], config), config)

    keys = [(j, big) for j in range(K + 1) for big in (True, False)]
    for key, w in zip(keys, ordered_map(_winding, keys, config.threads)):
        windings[key] = w

    c_counts: dict[int, int] = {}
    disc_counts: dict[int, int] = {}
    for k in range(-K, K + 1):
        if k > 0:
            w = windings[(k, True)] - windings[(k - 1, True)]
        elif k == 0:
            w = windings[(0, True)] - windings[(0, False)]
        else:
            w = windings[(-k - 1, False)] - windings[(-k, False)]
        c_counts[k], disc_counts[k] = int(w[0]), int(w[1])
    logger.info(f"Annulus scan |k| <= {K}: {sum(c_counts.values())} zeros of c, {sum(disc_counts.values())} zeros of Δ²-4")
    return AnnulusCounts(K, c_counts, disc_counts)

def _check_counts(counts: AnnulusCounts, K_align: int, which: str) -> None:
    bad = counts.mismatches(K_align, which)
    if bad:
        name = 'c' if which == 'c' else 'Δ²-4'
        logger.error(f"Zero counts of {name} differ from the expected ones: {bad}")
        raise CountMismatchError(f"Zero counts of {name} differ from the expected ones (divisor not tame or K_align too small)",
                                 {'function': name, 'K_align': K_align, 'mismatches': {str(k): list(v) for k, v in bad.items()}})


################
# Zero location
################

def _radius_function(config: RunConfig) -> Callable[[complex], float]:
    return lambda lam: local_radius(lam, config.cauchy_radius_fraction)

def _in_annulus(k: int) -> Callable[[complex], bool]:
    return lambda lam: lam != 0 and annulus_index(lam) == k

def _subdivision_seed(f: HolomorphicMap, k: int, config: RunConfig, growth_power: int = 1) -> complex:
    """Seed for Newton inside S_k: narrow down radially by count bisection, then take min |f| on the middle curve."""
    def _scaled(lams: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return np.asarray(f(lams)) / vacuum_growth(lams) ** growth_power

    t0, t1 = 0.0, 1.0
    for _ in range(config.subdivision_depth):
        tm = (t0 + t1) / 2
        try:
            upper = count_zeros(_scaled, annulus_contour(k, tm, t1, config), config)
        except ZeroOnContourError as err:
            at = err.report['lambda']
            return complex(at[0], at[1])
        if upper >= 1:
            t0 = tm
        else:
            t1 = tm
    middle = annulus_curve(k, (t0 + t1) / 2, config).sample()
    values = np.abs(_scaled(middle))
    return complex(middle[np.argmin(values)])

def zeros_in_annulus(f: HolomorphicMap, k: int, count: int, config: RunConfig | None = None, growth_power: int = 1) -> list[complex]:
    """
    Locate count zeros of f in S_k: Newton from λ_{k,0}, deflation for further zeros, radial subdivision as fallback.

    f grows like the growth_power-th power of the vacuum entries; the fallback counts are taken on f divided by it.

    Raises:
        NewtonConvergenceError: If Newton fails also from the subdivision seed.
    """
    config = config or get_run_config()
    radius_of = _radius_function(config)
    accept = _in_annulus(k)
    zeros: list[complex] = []
    for i in range(count):
        g = deflated(f, zeros)
        zero = None
        if i == 0:
            try:
                zero = newton_refine(g, lambda_k0(k), radius_of, config, accept)
            except NewtonConvergenceError:
                logger.warning(f"Newton from λ_{k},0 failed in S_{k}; falling back to radial subdivision")
        if zero is None:
            zero = newton_refine(g, _subdivision_seed(g, k, config, growth_power), radius_of, config, accept)
        zeros.append(zero)
    return zeros

def _assign_labels(zeros: list[complex], labels: list[int], per_label: int) -> dict[int, list[complex]]:
    """Greedy labelling by the signed radial coordinate, smaller |k| first."""
    free = list(zeros)
    assigned: dict[int, list[complex]] = {}
    for k in sorted(labels, key=lambda k: (abs(k), k)):
        chosen = sorted(free, key=lambda z: abs(radial_coordinate(z) - k))[:per_label]
        for z in chosen:
            free.remove(z)
        assigned[k] = chosen
    return assigned

def _locate(f: HolomorphicMap, counts: dict[int, int], K: int, K_align: int, per_label: int, config: RunConfig) -> dict[int, list[complex]]:
    labels = list(range(-K, K + 1))

    def _work(k: int) -> list[complex]:
        return zeros_in_annulus(f, k, counts[k], config) if counts[k] else []

    found = dict(zip(labels, ordered_map(_work, labels, config.threads)))
    assigned = {k: zs for k, zs in found.items() if abs(k) > K_align}
    inner_labels = [k for k in labels if abs(k) <= K_align]
    inner_zeros = [z for k in inner_labels for z in found[k]]
    uneven = any(len(found[k]) != per_label for k in inner_labels)
    if uneven:
        logger.warning(f"Uneven zero distribution inside |k| <= {K_align}: {[len(found[k]) for k in inner_labels]}; relabelling by proximity")
    assigned.update(_assign_labels(inner_zeros, inner_labels, per_label))
    return assigned


################
# Divisor and branch points
################

def vacuum_divisor(K: int) -> SpectralDivisor:
    """D0 = {(λ_{k,0}, (-1)^k)}, |k| <= K."""
    labels = list(range(-K, K + 1))
    return SpectralDivisor.from_arrays(labels, [lambda_k0(k) for k in labels], [mu_k0(k) for k in labels], K)

def merge_close_zeros(labels: list[int], lams: NDArray[np.complex128], mus: NDArray[np.complex128], separation: float) -> list[DivisorEntry]:
    """Entries from labelled zeros; zeros closer than separation·(1+|λ|) form one entry of higher multiplicity."""
    entries: list[DivisorEntry] = []
    skip: set[int] = set()
    for i, k in enumerate(labels):
        if k in skip:
            continue
        merged = [labels[j] for j in range(i + 1, len(labels))
                  if labels[j] not in skip and abs(lams[i] - lams[j]) < separation * (1 + abs(lams[i]))]
        skip.update(merged)
        mult = 1 + len(merged)
        if merged:
            logger.warning(f"Divisor points k={[k] + merged} coincide; merged with multiplicity {mult}")
        entries.append(DivisorEntry(k, complex(lams[i]), complex(mus[i]), mult))
    return entries

def find_divisor(p: PeriodicPotential, K: int, config: RunConfig | None = None, counts: AnnulusCounts | None = None) -> SpectralDivisor:
    """
    Spectral divisor of p: the zeros λ_k of c = M[2,1] in S_k, |k| <= K, with μ_k = a(λ_k).

    Counts are verified per annulus beyond K_align and in total inside it. Zeros closer than
    tame_separation are merged into one entry whose multiplicity is the number of merged zeros.

    Args:
        p (PeriodicPotential): The potential.
        K (int): Truncation radius.
        config (RunConfig | None): Numerical settings.
        counts (AnnulusCounts | None): Precomputed counts to reuse.

    Returns:
        SpectralDivisor: Entries for |k| <= K.

    Raises:
        CountMismatchError: If the zero counts differ from the expected ones.
        NewtonConvergenceError: If a zero cannot be refined.
    """
    config = config or get_run_config()
    K_align = min(config.K_align, K)
    if p.is_vacuum():
        logger.info(f"Vacuum potential, divisor is D0 with K={K}")
    counts = counts if counts is not None and counts.K >= K else annulus_counts(p, K, config)
    _check_counts(counts, K_align, 'c')

    zeros = _locate(c_function(p, config), counts.c, K, K_align, 1, config)
    labels = [k for k in sorted(zeros) if zeros[k]]
    lams = np.array([zeros[k][0] for k in labels], dtype=complex)
    M = monodromy_array(p, lams, config)
    mus = M[:, 0, 0]

    D = SpectralDivisor(merge_close_zeros(labels, lams, mus, config.tame_separation), K)
    residual = curve_residual(D, discriminant_function(p, config))
    logger.info(f"Divisor with {len(D)} entries, curve residual {residual:.3g}")
    return D

def find_branch_points(p: PeriodicPotential, K: int, config: RunConfig | None = None, counts: AnnulusCounts | None = None) -> BranchPointSet:
    """
    Branch points: the two zeros of Δ² - 4 in every S_k, |k| <= K.

    The pair is located around the critical point η of Δ near λ_{k,0} with a quadratic model of
    Δ - 2(-1)^k and polished by Newton. Pairs closer than double_point_tol·(1+|λ_{k,0}|) are double points.
    Annuli where the model fails use deflated Newton on Δ² - 4.

    Raises:
        CountMismatchError: If the zero counts differ from the expected ones.
        NewtonConvergenceError: If a branch point cannot be refined.
    """
    config = config or get_run_config()
    K_align = min(config.K_align, K)
    counts = counts if counts is not None and counts.K >= K else annulus_counts(p, K, config)
    _check_counts(counts, K_align, 'disc')
    delta = discriminant_function(p, config)

    def _disc(lams: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return delta(lams) ** 2 - 4

    def _pair(k: int) -> list[complex] | None:
        if counts.disc[k] != 2:
            return None
        try:
            return branch_pair(delta, k, config)
        except NewtonConvergenceError:
            logger.warning(f"Quadratic model failed in S_{k}; using deflated Newton on Δ²-4")
            return zeros_in_annulus(_disc, k, 2, config, growth_power=2)

    labels = list(range(-K, K + 1))
    model_pairs = dict(zip(labels, ordered_map(_pair, labels, config.threads)))

    pairs: dict[int, list[complex]] = {}
    inner_labels = [k for k in labels if abs(k) <= K_align]
    if any(model_pairs[k] is None for k in inner_labels):
        logger.warning(f"Uneven Δ²-4 zero distribution inside |k| <= {K_align}; relabelling by proximity")
        inner_zeros = [z for k in inner_labels for z in (model_pairs[k] or zeros_in_annulus(_disc, k, counts.disc[k], config, growth_power=2))]
        pairs.update(_assign_labels(inner_zeros, inner_labels, 2))
    else:
        pairs.update({k: model_pairs[k] for k in inner_labels})
    pairs.update({k: model_pairs[k] for k in labels if abs(k) > K_align})

    result = []
    for k in labels:
        kappa1, kappa2 = sorted(pairs[k], key=lambda z: (z.real, z.imag))
        double = abs(kappa1 - kappa2) < config.double_point_tol * (1 + abs(lambda_k0(k)))
        result.append(BranchPair(k, complex(kappa1), complex(kappa2), bool(double)))
    B = BranchPointSet(tuple(result), K)
    logger.info(f"Branch points |k| <= {K}: {sum(pair.double for pair in B)} double points")
    return B

def critical_point(delta: HolomorphicMap, seed: complex, config: RunConfig, accept: Callable[[complex], bool] | None = None) -> complex:
    """Zero of Δ' by Newton with Δ' and Δ'' from Cauchy Taylor coefficients."""
    radius_of = _radius_function(config)
    lam = complex(seed)
    prev_step = np.inf
    for _ in range(config.newton_max_iter):
        _, a1, a2 = taylor_coefficients(delta, lam, radius_of(lam), config.cauchy_points, 3)
        if a2 == 0:
            break
        step = -a1 / (2 * a2)
        lam = lam + step
        if accept is not None and not accept(lam):
            raise NewtonConvergenceError(f"Critical point iteration left its region from {seed}", {'seed': [complex(seed).real, complex(seed).imag]})
        scale = 1 + abs(lam)
        if abs(step) <= config.newton_tol * scale or (abs(step) < 1e-8 * scale and abs(step) >= prev_step):
            return lam
        prev_step = abs(step)
    raise NewtonConvergenceError(f"Critical point iteration did not converge from {seed}", {'seed': [complex(seed).real, complex(seed).imag]})

def branch_pair(delta: HolomorphicMap, k: int, config: RunConfig) -> list[complex]:
    """
    Branch pair of S_k around the critical point η of Δ: roots η ± w of the quadratic model of Δ - 2(-1)^k.

    A double root is only resolved to the square root of the noise in Δ, so the pair collapses
    onto η when the height |Δ(η) - 2(-1)^k| is below double_point_tol.
    """
    accept = _in_annulus(k)
    eta = critical_point(delta, lambda_k0(k), config, accept)
    a0, _, a2 = taylor_coefficients(delta, eta, local_radius(eta, config.cauchy_radius_fraction), config.cauchy_points, 3)
    target = 2 * mu_k0(k)
    if abs(a0 - target) < config.double_point_tol or a2 == 0:
        return [eta, eta]
    w = np.sqrt(-(a0 - target) / a2)

    def _g(lams: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return delta(lams) - target

    radius_of = _radius_function(config)
    try:
        kappa1 = newton_refine(_g, eta + w, radius_of, config, accept)
        kappa2 = newton_refine(deflated(_g, [kappa1]), eta - w, radius_of, config, accept)
    except NewtonConvergenceError:
        if abs(w) > local_radius(eta, config.cauchy_radius_fraction):
            raise
        # Narrow gap below the Newton resolution, keep the model roots
        logger.debug(f"Keeping quadratic-model branch points in S_{k} (half width {abs(w):.3g})")
        kappa1, kappa2 = eta + w, eta - w
    return [kappa1, kappa2]


################
# Classification
################

def sigma_involution(point: DivisorEntry | tuple[complex, complex]) -> DivisorEntry | tuple[complex, complex]:
    """σ(λ, μ) = (λ, 1/μ)."""
    if isinstance(point, DivisorEntry):
        return DivisorEntry(point.k, point.lam, 1 / point.mu, point.mult)
    lam, mu = point
    if mu == 0:
        raise ValueError("σ is undefined at μ = 0.")
    return (lam, 1 / mu)

def _coincident_pairs(D: SpectralDivisor, separation: float) -> Iterable[tuple[DivisorEntry, DivisorEntry]]:
    entries = D.entries
    lams = D.lambdas
    for i in range(len(entries)):
        close = np.abs(lams[i + 1:] - lams[i]) < separation * (1 + np.maximum(np.abs(lams[i + 1:]), abs(lams[i])))
        for j in np.nonzero(close)[0]:
            yield entries[i], entries[i + 1 + j]

def is_tame(D: SpectralDivisor, config: RunConfig | None = None) -> bool:
    """All λ_k pairwise distinct (relative separation tame_separation) and simple."""
    config = config or get_run_config()
    if np.any(D.mults > 1):
        return False
    return next(iter(_coincident_pairs(D, config.tame_separation)), None) is None

def is_nonspecial(D: SpectralDivisor, config: RunConfig | None = None) -> bool:
    """Coinciding λ's carry coinciding μ's."""
    config = config or get_run_config()
    for e1, e2 in _coincident_pairs(D, config.tame_separation):
        if abs(e1.mu - e2.mu) >= config.tame_separation * (1 + abs(e1.mu)):
            return False
    return True

def curve_residual(D: SpectralDivisor, delta: HolomorphicMap) -> float:
    """max_k |μ_k² - Δ(λ_k) μ_k + 1|."""
    if len(D) == 0:
        return 0.0
    values = np.asarray(delta(D.lambdas))
    return float(np.abs(D.mus**2 - values * D.mus + 1).max())

def singular_entries(p: PeriodicPotential, D: SpectralDivisor, config: RunConfig | None = None, tol: float = 1e-7) -> list[int]:
    """Labels whose point sits on a singular curve point: Δ = ±2 and λΔ' = 0 at λ_k, both within tol."""
    config = config or get_run_config()
    delta = discriminant_function(p, config)
    labels = []
    for e in D:
        a0, a1 = taylor_coefficients(delta, e.lam, local_radius(e.lam, config.cauchy_radius_fraction), config.cauchy_points, 2)
        if abs(a0**2 - 4) < tol and abs(a1 * e.lam) < tol:
            labels.append(e.k)
    return labels

def require_regular(p: PeriodicPotential, D: SpectralDivisor, config: RunConfig | None = None) -> None:
    """Raise SingularPointError if an entry of D lies on a singular point of the curve of p."""
    singular = singular_entries(p, D, config)
    if singular:
        logger.error(f"Divisor entries at singular curve points: {singular}")
        raise SingularPointError(f"Divisor entries at singular curve points: {singular}", {'labels': singular})


################
# Continuation and variations
################

def track_divisor(p: PeriodicPotential, reference: SpectralDivisor, labels: Iterable[int] | None = None, config: RunConfig | None = None) -> SpectralDivisor:
    """
    Follow the entries of a reference divisor to the divisor of p by Newton on c seeded at the reference points.

    Raises:
        TrackingLossError: If an entry leaves its annulus.
    """
    config = config or get_run_config()
    labels = list(reference.labels) if labels is None else list(labels)
    f = c_function(p, config)
    radius_of = _radius_function(config)

    def _track(k: int) -> complex:
        seed = reference.entry(k).lam
        home = annulus_index(seed)
        try:
            return newton_refine(f, seed, radius_of, config, _in_annulus(home))
        except NewtonConvergenceError as err:
            logger.error(f"Lost divisor entry k={k} while tracking from λ={seed}")
            raise TrackingLossError(f"Divisor entry k={k} left its annulus S_{home}", {'k': k, **err.report}) from err

    lams = np.array(ordered_map(_track, labels, config.threads), dtype=complex)
    mus = monodromy_array(p, lams, config)[:, 0, 0] if lams.size else np.zeros(0, dtype=complex)
    return SpectralDivisor.from_arrays(labels, lams, mus, reference.K)

def divisor_variation(p: PeriodicPotential, v: PotentialVariation, h: float, reference: SpectralDivisor, labels: Iterable[int] | None = None, config: RunConfig | None = None) -> dict[int, tuple[complex, complex]]:
    """
    Variations (δλ_k, δμ_k) along v by central differences with Richardson extrapolation,
    R = (4 d(h/2) - d(h)) / 3.

    Returns:
        dict[int, tuple[complex, complex]]: Label -> (δλ_k, δμ_k).
    """
    config = config or get_run_config()
    labels = list(reference.labels) if labels is None else list(labels)

    def _central(step: float) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        plus = track_divisor(add_variation(p, v, step), reference, labels, config)
        minus = track_divisor(add_variation(p, v, -step), reference, labels, config)
        return (plus.lambdas - minus.lambdas) / (2 * step), (plus.mus - minus.mus) / (2 * step)

    dl_h, dm_h = _central(h)
    dl_h2, dm_h2 = _central(h / 2)
    dl = (4 * dl_h2 - dl_h) / 3
    dm = (4 * dm_h2 - dm_h) / 3
    return {k: (complex(dl[i]), complex(dm[i])) for i, k in enumerate(labels)}
