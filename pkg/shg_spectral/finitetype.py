from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass, field
from typing import Iterable, Mapping
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from shg_spectral.errors import CountMismatchError, FixedPointError, NewtonConvergenceError, NotTameError
from shg_spectral.interpolation import TelescopedProduct
from shg_spectral.monodromy import delta0, lambda_k0, mu_k0, vacuum_growth
from shg_spectral.run_config import RunConfig, get_run_config
from shg_spectral.spectral.annulus import annulus_contour, annulus_index, local_radius
from shg_spectral.spectral.contour import HolomorphicMap, count_zeros
from shg_spectral.spectral.divisor import branch_pair, critical_point, is_tame
from shg_spectral.spectral.metric import divisor_distance
from shg_spectral.utils.utility_classes import BranchPair, BranchPointSet, DivisorEntry, SpectralDivisor
from shg_spectral.utils.utils import as_complex_array, ordered_map


logger = logging.getLogger(__name__)


################
# Interpolated discriminant
################

@dataclass(frozen=True)
class InterpolatedDelta:
    """
    Δ(λ) = Δ0(λ) + Σ_k (v_k - Δ0(λ_k))·L_k(λ) with the cardinal functions of the telescoped node product.

    Beyond K the nodes are the vacuum nodes with values 2(-1)^k, where every L_k vanishes.
    """
    product: TelescopedProduct
    values: NDArray[np.complex128]

    @property
    def K(self) -> int:
        return self.product.K

    @property
    def nodes(self) -> NDArray[np.complex128]:
        return self.product.roots

    def __call__(self, lam: ArrayLike) -> NDArray[np.complex128]:
        lam = as_complex_array(lam)
        weights = self.values - as_complex_array(delta0(self.nodes))
        return as_complex_array(delta0(lam)) + self.product.cardinals(lam) @ weights

    def derivative(self, lam: ArrayLike, fraction: float = 0.005, n_points: int = 8) -> NDArray[np.complex128]:
        """Δ' by the Cauchy integral on small circles, vectorized."""
        lam = as_complex_array(lam)
        radius = np.atleast_1d(local_radius(lam, fraction))
        theta = 2 * np.pi * np.arange(n_points) / n_points
        circle = lam[:, None] + radius[:, None] * np.exp(1j * theta)[None, :]
        values = self(circle.ravel()).reshape(circle.shape)
        return np.mean(values * np.exp(-1j * theta)[None, :], axis=1) / radius

    def residual(self) -> float:
        """max_j |Δ(λ_j) - v_j|."""
        return float(np.abs(self(self.nodes) - self.values).max())


def interp_delta(labels: ArrayLike, lambdas: ArrayLike, values: ArrayLike, K: int) -> InterpolatedDelta:
    """
    Interpolant of the node data (λ_k, v_k), |k| <= K.

    Raises:
        NodeCollisionError: If two nodes coincide.
    """
    product = TelescopedProduct.from_roots(labels, lambdas, K)
    order = np.argsort(np.asarray(labels, dtype=int), kind='stable')
    product.require_simple()
    return InterpolatedDelta(product, as_complex_array(values)[order])


################
# Critical points
################

@dataclass(frozen=True)
class CriticalSet:
    """
    Zeros η_k of Δ' per annulus and the additional zero η_* of S_0.

    Attributes:
        - eta (dict[int, complex]): η_k by label.
        - eta_star (complex | None): The extra critical point, near λ = 1 for small potentials.
        - eta_star_label (int | None): Annulus containing η_*.
    """
    eta: dict[int, complex]
    eta_star: complex | None = None
    eta_star_label: int | None = None

    def __getitem__(self, k: int) -> complex:
        return self.eta[k]


def _derivative_map(delta: InterpolatedDelta) -> HolomorphicMap:
    return lambda lam: delta.derivative(lam)

def critical_points(delta: InterpolatedDelta, K: int, labels: Iterable[int] | None = None, config: RunConfig | None = None, verify: bool = True) -> CriticalSet:
    """
    Newton on Δ' seeded at the vacuum nodes, with argument-principle counts of Δ' per annulus.

    S_0 holds two critical points, η_0 near -1 and η_* near 1; every other annulus holds one.

    Raises:
        CountMismatchError: If an annulus holds a different number of critical points.
        NewtonConvergenceError: If Newton leaves the annulus.
    """
    config = config or get_run_config()
    labels = list(range(-K, K + 1)) if labels is None else sorted(labels)
    derivative = _derivative_map(delta)

    if verify:
        def _count(k: int) -> int:
            return int(count_zeros(lambda lam: derivative(lam) / vacuum_growth(lam), annulus_contour(k, config=config), config))
        counts = dict(zip(labels, ordered_map(_count, labels, config.threads)))
        mismatches = {str(k): (n, 2 if k == 0 else 1) for k, n in counts.items() if n != (2 if k == 0 else 1)}
        if mismatches:
            logger.error(f"Critical point counts differ from the expected ones: {mismatches}")
            raise CountMismatchError("Critical point counts differ from the expected ones", {'mismatches': mismatches})

    def _eta(k: int) -> complex:
        accept = (lambda lam: lam != 0 and annulus_index(lam) == k) if abs(k) > config.K_align else None
        return critical_point(delta, lambda_k0(k), config, accept)

    eta = dict(zip(labels, ordered_map(_eta, labels, config.threads)))
    eta_star = eta_star_label = None
    if 0 in labels:
        eta_star = critical_point(delta, 1.0, config)
        eta_star_label = annulus_index(eta_star)
        if abs(eta_star - eta[0]) < config.tame_separation * (1 + abs(eta_star)):
            logger.warning(f"η_* = {eta_star} coincides with η_0")
        if eta_star_label != 0:
            logger.warning(f"η_* = {eta_star} lies in S_{eta_star_label} instead of S_0")
    return CriticalSet(eta, eta_star, eta_star_label)


################
# Fixed-point iteration
################

@dataclass(frozen=True)
class PhiStep:
    """One application of the iteration map: new tail values, defect and the objects behind them."""
    z: dict[int, complex]
    defect: float
    delta: InterpolatedDelta
    critical: CriticalSet


def _node_data(D: SpectralDivisor, N: int, z: Mapping[int, complex]) -> tuple[list[int], NDArray[np.complex128], NDArray[np.complex128]]:
    labels = list(range(-D.K, D.K + 1))
    lams = np.array([D.entry(k).lam for k in labels], dtype=complex)
    values = np.array([D.entry(k).mu + 1 / D.entry(k).mu if abs(k) <= N else 2 * mu_k0(k) + z[k] for k in labels], dtype=complex)
    return labels, lams, values

def tail_labels(K: int, N: int) -> list[int]:
    return [k for k in range(-K, K + 1) if abs(k) > N]

def initial_tail(D: SpectralDivisor, N: int) -> dict[int, complex]:
    """z_k = μ_k + 1/μ_k - 2(-1)^k, the node values of the curve through D."""
    return {k: D.entry(k).mu + 1 / D.entry(k).mu - 2 * mu_k0(k) for k in tail_labels(D.K, N)}

def phi_step(D: SpectralDivisor, N: int, z: Mapping[int, complex], config: RunConfig | None = None, verify: bool = False) -> PhiStep:
    """
    z̃_k = z_k - (Δ(η_k) - 2(-1)^k) for N < |k| <= K, where Δ interpolates μ_k + 1/μ_k at λ_k for |k| <= N
    and 2(-1)^k + z_k for |k| > N, and η_k are the critical points of Δ.
    """
    config = config or get_run_config()
    labels, lams, values = _node_data(D, N, z)
    delta = interp_delta(labels, lams, values, D.K)
    tails = tail_labels(D.K, N)
    critical = critical_points(delta, D.K, tails, config, verify)
    etas = np.array([critical[k] for k in tails], dtype=complex)
    heights = delta(etas) - np.array([2 * mu_k0(k) for k in tails]) if tails else np.zeros(0, dtype=complex)
    z_new = {k: complex(z[k] - heights[i]) for i, k in enumerate(tails)}
    defect = float(np.abs(heights).max()) if tails else 0.0
    return PhiStep(z_new, defect, delta, critical)


@dataclass(frozen=True)
class FiniteTypeResult:
    """
    Finite-type projection of a divisor.

    Attributes:
        - D_star (SpectralDivisor): λ_k, μ_k for |k| <= N and (η_k, (-1)^k) for N < |k| <= K.
        - N, K (int): Kept radius and truncation radius; finiteness is certified for N < |k| <= K.
        - iterations (int): Number of iteration-map applications.
        - contraction (float): Largest ratio of successive step norms over the final iterations.
        - defects (list[float]): Defect after every iteration.
        - distance (float): divisor_distance(D, D_star).
        - delta (InterpolatedDelta): Discriminant Δ* of the finite-type curve.
        - eta_star (complex | None): The extra critical point of Δ*.
    """
    D_star: SpectralDivisor
    N: int
    K: int
    iterations: int
    contraction: float
    defects: list[float]
    distance: float
    delta: InterpolatedDelta
    eta_star: complex | None = None
    log: list[dict[str, float]] = field(default_factory=list)

    @property
    def defect(self) -> float:
        return self.defects[-1] if self.defects else 0.0


def _step_norm(z1: Mapping[int, complex], z0: Mapping[int, complex]) -> float:
    return float(np.sqrt(sum(abs(z1[k] - z0[k]) ** 2 for k in z1))) if z1 else 0.0

def finite_type_project(D: SpectralDivisor, N: int, tol: float = 1e-10, max_iter: int = 30, config: RunConfig | None = None) -> FiniteTypeResult:
    """
    Project a tame divisor onto a finite-type divisor by iterating the map phi_step to a fixed point.

    Args:
        D (SpectralDivisor): Tame divisor with all labels |k| <= K.
        N (int): Entries |k| <= N are kept; gaps N < |k| <= K are closed.
        tol (float): Defect max |Δ*(η_k) - 2(-1)^k| at convergence.
        max_iter (int): Iteration cap.

    Returns:
        FiniteTypeResult: The projected divisor and the convergence log.

    Raises:
        ValueError: If N is out of range.
        NotTameError: If D is not tame or misses a label.
        FixedPointError: If the defect is not below tol after max_iter iterations.
    """
    config = config or get_run_config()
    if not 0 <= N <= D.K:
        logger.error(f"N must lie in [0, K={D.K}], got {N}")
        raise ValueError(f"N must lie in [0, K={D.K}], got {N}")
    if not is_tame(D, config) or len(D) != 2 * D.K + 1:
        logger.error("Finite-type projection needs a tame divisor with one entry per label.")
        raise NotTameError("Finite-type projection needs a tame divisor with one entry per label", {"K": D.K})

    z = initial_tail(D, N)
    defects: list[float] = []
    steps: list[float] = []
    log: list[dict[str, float]] = []
    step = None
    for iteration in range(1, max_iter + 1):
        step = phi_step(D, N, z, config, verify=(iteration == 1))
        steps.append(_step_norm(step.z, z))
        defects.append(step.defect)
        ratios = [steps[i] / steps[i - 1] for i in range(max(1, len(steps) - 3), len(steps)) if steps[i - 1] > 0]
        contraction = max(ratios) if ratios else 0.0
        log.append({'iteration': iteration, 'defect': step.defect, 'contraction': contraction})
        logger.info(f"Finite-type iteration {iteration} (N={N}, K={D.K}): defect {step.defect:.3g}, contraction {contraction:.3g}")
        if step.defect < tol:
            break
        z = step.z
    else:
        logger.error(f"Finite-type iteration did not converge in {max_iter} iterations (N={N}, defect {defects[-1]:.3g})")
        raise FixedPointError(f"No fixed point within {max_iter} iterations; increase N", {'N': N, 'K': D.K, 'defects': defects})

    entries = []
    for e in D:
        if abs(e.k) <= N:
            entries.append(e)
        else:
            entries.append(DivisorEntry(e.k, step.critical[e.k], complex(mu_k0(e.k)), 1))
    D_star = D.replace_entries(entries)
    eta_star = critical_points(step.delta, D.K, [0], config, verify=False).eta_star
    distance = divisor_distance(D, D_star, config=config)
    logger.info(f"Finite-type projection converged: {len(defects)} iterations, distance {distance:.3g}")
    return FiniteTypeResult(D_star, N, D.K, len(defects), log[-1]['contraction'], defects, distance, step.delta, eta_star, log)

def finite_type_project_auto(D: SpectralDivisor, tol: float = 1e-10, max_iter: int = 30, config: RunConfig | None = None) -> FiniteTypeResult:
    """Start at N = max(4, K/4) and double N on non-convergence."""
    N = min(max(4, D.K // 4), D.K)
    while True:
        try:
            return finite_type_project(D, N, tol, max_iter, config)
        except (FixedPointError, NewtonConvergenceError) as err:
            if N >= D.K:
                raise
            logger.warning(f"Projection with N={N} failed ({err}); retrying with N={min(2 * N, D.K)}")
            N = min(2 * N, D.K)

def finite_type_branch_points(result: FiniteTypeResult, config: RunConfig | None = None) -> BranchPointSet:
    """Branch points of Δ*: pairs around the critical points for |k| <= N, double points η_k beyond."""
    config = config or get_run_config()
    pairs = []
    for k in range(-result.K, result.K + 1):
        if abs(k) > result.N:
            eta = result.D_star.entry(k).lam
            pairs.append(BranchPair(k, eta, eta, True))
            continue
        kappa1, kappa2 = sorted(branch_pair(result.delta, k, config), key=lambda z: (z.real, z.imag))
        double = abs(kappa1 - kappa2) < config.double_point_tol * (1 + abs(lambda_k0(k)))
        pairs.append(BranchPair(k, complex(kappa1), complex(kappa2), bool(double)))
    return BranchPointSet(tuple(pairs), result.K)
