from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import solve_triangular
from scipy.special import polygamma

from shg_spectral.errors import HermiteSystemError, NodeCollisionError, NotTameError
from shg_spectral.interpolation import TelescopedProduct, c0, c0_over_node, tail_node_data, vacuum_cardinals
from shg_spectral.monodromy import lambda_k0, monodromy_array, vacuum_entries
from shg_spectral.potential import PeriodicPotential, tau_of
from shg_spectral.run_config import RunConfig, get_run_config
from shg_spectral.spectral.annulus import annulus_index, level_curve, local_radius
from shg_spectral.spectral.contour import HolomorphicMap, taylor_coefficients
from shg_spectral.spectral.divisor import find_divisor, is_tame
from shg_spectral.utils.utility_classes import Matrix2C, SpectralDivisor
from shg_spectral.utils.utils import as_complex_array


logger = logging.getLogger(__name__)

# Σ_{k>=1} 1/(16π²k²)-type tails are resummed with this constant
_NODE_GROWTH = 16 * np.pi**2


################
# τ
################

def tau_from_divisor(D: SpectralDivisor, n_steps: int = 64, max_doublings: int = 6) -> complex:
    """
    τ = (∏ λ_{k,0}/λ_k)^{1/2}; factors with |k| > K are 1.

    The square root is continued from 1 along the homotopy λ_k(t) = (1 - t)λ_{k,0} + tλ_k.

    Raises:
        NodeCollisionError: If the homotopy passes through λ = 0.
    """
    product = TelescopedProduct.from_divisor(D)
    nodes, roots = product.nodes, product.roots
    for _ in range(max_doublings + 1):
        t = np.linspace(0, 1, n_steps + 1)[:, None]
        path = (1 - t) * nodes[None, :] + t * roots[None, :]
        if np.abs(path).min() < 1e-300:
            logger.error("The τ homotopy passes through λ = 0.")
            raise NodeCollisionError("The τ homotopy passes through λ = 0", {'K': D.K})
        phases = np.angle(nodes[None, :] / path)
        if np.abs(np.diff(phases, axis=0)).max() < np.pi / 2:
            break
        n_steps *= 2
    else:
        logger.warning(f"τ homotopy phase increments still large after {n_steps} steps")
    continued = np.unwrap(phases, axis=0)[-1]
    log_tau_sq = np.sum(np.log(np.abs(nodes / roots))) + 1j * np.sum(continued)
    return complex(np.exp(log_tau_sq / 2))


################
# Hermite blocks
################

@dataclass(frozen=True)
class HermiteBlock:
    """
    A_k(λ) = Σ_{j=1}^{d} t_j c(λ)/(λ - λ_k)^j for an entry of multiplicity d, with A_k^{(l)}(λ_k) = μ^{(l)}(λ_k).

    Attributes:
        - k (int): Entry label.
        - lam (complex): Node λ_k.
        - coefficients (NDArray[np.complex128]): t_1..t_d.
        - condition (float): Condition number of the triangular system.
        - copies (tuple[int, ...]): Root indices of the entry in the telescoped product.
    """
    k: int
    lam: complex
    coefficients: NDArray[np.complex128]
    condition: float
    copies: tuple[int, ...]

    @property
    def mult(self) -> int:
        return len(self.coefficients)

    def evaluate(self, product: TelescopedProduct, tau: complex, lam: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """A_k(λ) = h(λ)·Σ_s t_{d-s}(λ - λ_k)^s with h = c/(λ - λ_k)^d, regular at λ_k."""
        h = tau * product.without_roots(lam, self.copies)
        powers = (lam - self.lam)[:, None] ** np.arange(self.mult)[None, :]
        return h * (powers @ self.coefficients[::-1])


def curve_mu_branch(delta: HolomorphicMap, lam_k: complex, mu_k: complex) -> HolomorphicMap:
    """μ(λ) = (Δ ± √(Δ² - 4))/2 with the sign chosen near λ_k so that μ(λ_k) = μ_k."""

    def _mu(lam: NDArray[np.complex128]) -> NDArray[np.complex128]:
        values = np.asarray(delta(lam), dtype=complex)
        root = np.sqrt(values**2 - 4)
        plus, minus = (values + root) / 2, (values - root) / 2
        return np.where(np.abs(plus - mu_k) <= np.abs(minus - mu_k), plus, minus)
    return _mu

def _hermite_radius(product: TelescopedProduct, index: int) -> float:
    return product.node_spacing(index) / 4

def hermite_block(D: SpectralDivisor, k: int, curve_mu: HolomorphicMap, config: RunConfig | None = None, tau: complex | None = None, inverse: bool = False) -> HermiteBlock:
    """
    Coefficients of the Hermite term of entry k from the triangular Toeplitz system of Taylor coefficients.

    With c = (λ - λ_k)^d h, the l-th Taylor coefficient of A_k is Σ_{s<=l} t_{d-s} h_{l-s}, which must
    equal the l-th coefficient of μ (or 1/μ with inverse). Taylor coefficients come from Cauchy
    integrals on a circle of ¼ the distance to the nearest other node.

    Raises:
        HermiteSystemError: If (λ_k, μ_k) is a branch point or the system is ill-conditioned.
    """
    config = config or get_run_config()
    entry = D.entry(k)
    product = TelescopedProduct.from_divisor(D)
    tau = tau_from_divisor(D) if tau is None else tau
    copies = tuple(int(i) for i in np.nonzero(product.root_labels == k)[0])
    d = len(copies)
    if abs(entry.mu - 1 / entry.mu) < 1e-8 * (1 + abs(entry.mu)):
        logger.error(f"Entry k={k} with μ={entry.mu} sits on a branch point")
        raise HermiteSystemError(f"Entry k={k} is a branch point of the curve", {'k': k, 'mu': [entry.mu.real, entry.mu.imag]})

    radius = _hermite_radius(product, copies[0]) if d > 1 else local_radius(entry.lam, config.cauchy_radius_fraction)
    n_points = max(config.cauchy_points, 4 * d)

    def _h(lam: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return tau * product.without_roots(lam, copies)

    def _target(lam: NDArray[np.complex128]) -> NDArray[np.complex128]:
        values = np.asarray(curve_mu(lam), dtype=complex)
        return 1 / values if inverse else values

    h = np.atleast_1d(taylor_coefficients(_h, entry.lam, radius, n_points, d))
    m = np.atleast_1d(taylor_coefficients(_target, entry.lam, radius, n_points, d))
    T = np.zeros((d, d), dtype=complex)
    for l in range(d):
        T[l, :l + 1] = h[l::-1]
    condition = float(np.linalg.cond(T))
    if not np.isfinite(condition) or condition > 1e12:
        logger.error(f"Hermite system of entry k={k} is ill-conditioned (cond={condition:.3g})")
        raise HermiteSystemError(f"Ill-conditioned Hermite system for k={k}", {'k': k, 'condition': condition})
    t_rev = solve_triangular(T, m, lower=True)
    logger.debug(f"Hermite block k={k}, d={d}, cond={condition:.3g}")
    return HermiteBlock(k, complex(entry.lam), t_rev[::-1].copy(), condition, copies)


################
# Reconstructed monodromy
################

@dataclass(frozen=True)
class ReconstructedMonodromy:
    """
    Monodromy rebuilt from a divisor: c by the telescoped product, a and d by cardinal sums, b = (ad - 1)/c.

    Attributes:
        - D (SpectralDivisor): Source divisor.
        - tau (complex): τ from the divisor.
        - K (int): Truncation radius; entries beyond K are vacuum.
        - tail_terms (int): Vacuum tail terms summed explicitly before the asymptotic remainder.
        - blocks (tuple): Hermite blocks (for a, for d) of the entries with multiplicity > 1.
    """
    D: SpectralDivisor
    tau: complex
    K: int
    tail_terms: int
    blocks: tuple[tuple[HermiteBlock, HermiteBlock], ...] = field(default=())

    @cached_property
    def product(self) -> TelescopedProduct:
        return TelescopedProduct.from_divisor(self.D)

    @cached_property
    def _simple(self) -> NDArray[np.int_]:
        labels = self.product.root_labels
        return np.array([i for i, k in enumerate(labels) if np.sum(labels == k) == 1], dtype=int)

    @cached_property
    def _tail(self) -> tuple[NDArray[np.int_], NDArray[np.float64], NDArray[np.complex128]]:
        return tail_node_data(self.product, self.tail_terms)

    def c(self, lam: ArrayLike) -> NDArray[np.complex128]:
        return self.tau * self.product.value(lam)

    def _cardinal_sum(self, lam: NDArray[np.complex128], inverse: bool) -> NDArray[np.complex128]:
        mus = np.array([self.D.entry(int(k)).mu for k in self.product.root_labels[self._simple]])
        weights = 1 / mus if inverse else mus
        quotients = self.product.quotients(lam)[:, self._simple]
        derivatives = self.product.root_derivatives[self._simple]
        total = (quotients / derivatives[None, :]) @ weights
        for block_a, block_d in self.blocks:
            total = total + (block_d if inverse else block_a).evaluate(self.product, self.tau, lam)
        vacuum = vacuum_cardinals(lam, self.product.labels) @ np.where(self.product.labels % 2 == 0, 1.0, -1.0)
        return total - vacuum

    def _tail_correction(self, lam: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """Σ_{|k|>K} (-1)^k (ℓ_k - ℓ⁰_k): the vacuum tail nodes seen by the perturbed c."""
        labels, nodes, ratios = self._tail
        weight = 8 / (1 - 1 / nodes)
        grid_lam, grid_k = np.meshgrid(lam, labels, indexing='ij')
        quotient = c0_over_node(grid_lam, grid_k)

        # Close to an inner node R(λ) loses accuracy and the tail nodes are far away
        inner = self.product.nodes
        nearest = inner[np.argmin(np.abs(lam[:, None] - inner[None, :]), axis=1)]
        near_inner = np.abs(lam - nearest) < np.atleast_1d(local_radius(nearest, 0.1))
        P = self.product.value(lam)
        with np.errstate(divide='ignore', invalid='ignore'):
            R = self.product.ratio(lam)
            far_form = quotient * (R[:, None] / ratios[None, :] - 1)
            near_form = P[:, None] / ((lam[:, None] - nodes[None, :]) * ratios[None, :]) - quotient
        terms = np.where(near_inner[:, None], near_form, far_form)
        explicit = terms @ weight

        c0_values = c0(lam)
        psi = polygamma(1, self.K + self.tail_terms + 1)
        remainder = -8 * psi / _NODE_GROWTH * ((P - c0_values) + (self.product.tau_squared * P - c0_values) / lam)
        return explicit + remainder

    def a(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """a = a0 + Σ_{|k|<=K}[μ_k ℓ_k - (-1)^k ℓ⁰_k] + tail correction."""
        lam = as_complex_array(lam)
        return vacuum_entries(lam)[0] + self._cardinal_sum(lam, False) + self._tail_correction(lam)

    def d(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """d as a with μ_k replaced by μ_k^{-1}."""
        lam = as_complex_array(lam)
        return vacuum_entries(lam)[3] + self._cardinal_sum(lam, True) + self._tail_correction(lam)

    def _nearest_zero(self, lam: complex) -> tuple[complex, float] | None:
        """(zero of c, Cauchy circle radius) if λ is within ¼ node spacing of a zero of c."""
        roots = self.product.roots
        i = int(np.argmin(np.abs(roots - lam)))
        candidates = [(complex(roots[i]), self.product.node_spacing(i))]
        k = annulus_index(lam)
        if abs(k) > self.K:
            node = lambda_k0(k)
            spacing = min(abs(lambda_k0(k + 1) - node), abs(lambda_k0(k - 1) - node) if abs(k - 1) > self.K else np.inf)
            candidates.append((complex(node), spacing))
        zero, spacing = min(candidates, key=lambda zs: abs(zs[0] - lam))
        if spacing == 0:
            logger.error(f"Zero of c at λ={zero} collides with another node")
            raise NodeCollisionError(f"Cauchy circle around λ={zero} collides with a node", {'lambda': [zero.real, zero.imag]})
        if abs(zero - lam) >= spacing / 4:
            return None
        return zero, spacing / 2

    def _b_direct(self, lam: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return (self.a(lam) * self.d(lam) - 1) / self.c(lam)

    def b(self, lam: ArrayLike, n_circle: int = 64) -> NDArray[np.complex128]:
        """
        b = (ad - 1)/c; within ¼ node spacing of a zero of c, b is read from the Cauchy integral
        over a circle of ½ the node spacing around that zero.
        """
        lam = as_complex_array(lam)
        values = np.empty(len(lam), dtype=complex)
        direct = np.ones(len(lam), dtype=bool)
        theta = 2 * np.pi * np.arange(n_circle) / n_circle
        for i, point in enumerate(lam):
            near = self._nearest_zero(complex(point))
            if near is None:
                continue
            zero, radius = near
            w = zero + radius * np.exp(1j * theta)
            values[i] = np.mean(self._b_direct(w) * (w - zero) / (w - point))
            direct[i] = False
        if np.any(direct):
            values[direct] = self._b_direct(lam[direct])
        return values

    def delta(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """Δ = a + d, the spectral curve recovered from the divisor."""
        return self.a(lam) + self.d(lam)

    def evaluate(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """Matrices of shape (n, 2, 2)."""
        lam = as_complex_array(lam)
        out = np.empty((len(lam), 2, 2), dtype=complex)
        out[:, 0, 0], out[:, 0, 1], out[:, 1, 0], out[:, 1, 1] = self.a(lam), self.b(lam), self.c(lam), self.d(lam)
        return out

    def matrix(self, lam: complex) -> Matrix2C:
        return Matrix2C.from_array(self.evaluate(lam)[0])


def reconstruct_monodromy(D: SpectralDivisor, config: RunConfig | None = None, curve_mu: Callable[[int], HolomorphicMap] | None = None) -> ReconstructedMonodromy:
    """
    Reconstruct the monodromy from a divisor.

    Args:
        D (SpectralDivisor): Non-special divisor.
        config (RunConfig | None): Numerical settings (tail_terms, Cauchy sampling).
        curve_mu (Callable | None): Label -> μ(λ) on the curve near that entry; needed for entries of multiplicity > 1.

    Raises:
        NotTameError: If D has multiple entries and no curve data is given.
    """
    config = config or get_run_config()
    tau = tau_from_divisor(D)
    multiple = [e.k for e in D if e.mult > 1]
    if multiple and curve_mu is None:
        logger.error(f"Entries {multiple} have multiplicity > 1 and no curve data was given")
        raise NotTameError(f"Divisor is not tame at {multiple}; curve data is required", {'labels': multiple})
    if not multiple:
        TelescopedProduct.from_divisor(D).require_simple()
    blocks = tuple(
        (hermite_block(D, k, curve_mu(k), config, tau), hermite_block(D, k, curve_mu(k), config, tau, inverse=True))
        for k in multiple)
    logger.info(f"Reconstructed monodromy K={D.K}, τ={tau:.12g}, {len(blocks)} Hermite blocks")
    return ReconstructedMonodromy(D, tau, D.K, config.tail_terms, blocks)

def c_from_divisor(D: SpectralDivisor, lam: ArrayLike, config: RunConfig | None = None) -> NDArray[np.complex128]:
    return reconstruct_monodromy(D, config).c(lam)

def a_from_divisor(D: SpectralDivisor, lam: ArrayLike, config: RunConfig | None = None) -> NDArray[np.complex128]:
    return reconstruct_monodromy(D, config).a(lam)

def d_from_divisor(D: SpectralDivisor, lam: ArrayLike, config: RunConfig | None = None) -> NDArray[np.complex128]:
    return reconstruct_monodromy(D, config).d(lam)

def b_from_divisor(D: SpectralDivisor, lam: ArrayLike, config: RunConfig | None = None) -> NDArray[np.complex128]:
    return reconstruct_monodromy(D, config).b(lam)

def curve_from_divisor(D: SpectralDivisor, config: RunConfig | None = None) -> HolomorphicMap:
    """Δ(λ) = a + d of the reconstructed monodromy."""
    return reconstruct_monodromy(D, config).delta


################
# Round trip
################

def default_test_grid(n: int = 20, seed: int = 0, k_max: int = 8) -> NDArray[np.complex128]:
    """Seeded points on annulus boundaries |ζ| = (j + ½)π, j < k_max, both branches, away from the nodes and the negative axis."""
    rng = np.random.default_rng(seed)
    j = rng.integers(0, k_max, size=n)
    big = rng.integers(0, 2, size=n).astype(bool)
    t = rng.uniform(0.05, 0.95, size=n)
    return np.array([level_curve((jj + 0.5) * np.pi, bool(bb))(np.array([tt]))[0] for jj, bb, tt in zip(j, big, t)])


@dataclass(frozen=True)
class RoundtripReport:
    """
    Residuals of the reconstruction against the integrated monodromy.

    Attributes:
        - errors (dict[str, float]): Max over the grid of |entry - direct| / max |direct entries| per entry.
        - tau_error (float): |τ - e^{-u(0)/2}|.
        - trace_error (float): Max |Δ - (a + d)| relative to max(1, |Δ|).
        - determinant_error (float): Max |ad - bc - 1| of the reconstruction.
    """
    K: int
    n_points: int
    tau: complex
    tau_error: float
    errors: dict[str, float]
    trace_error: float
    determinant_error: float

    @property
    def max_error(self) -> float:
        return max(self.errors.values())


def roundtrip_report(p: PeriodicPotential, K: int, test_grid: ArrayLike | None = None, config: RunConfig | None = None) -> RoundtripReport:
    """
    Extract the divisor of p, reconstruct the monodromy and compare it with direct integration on the test grid.

    Raises:
        NotTameError: If the divisor of p is not tame.
    """
    config = config or get_run_config()
    grid = as_complex_array(default_test_grid(seed=config.seed) if test_grid is None else test_grid)
    D = find_divisor(p, K, config)
    if not is_tame(D, config):
        logger.error("Round trip needs a tame divisor.")
        raise NotTameError("Round trip needs a tame divisor", {'K': K})
    rec = reconstruct_monodromy(D, config)
    direct = monodromy_array(p, grid, config)
    rebuilt = rec.evaluate(grid)

    scale = np.abs(direct).reshape(len(grid), 4).max(axis=1)
    names = {'a': (0, 0), 'b': (0, 1), 'c': (1, 0), 'd': (1, 1)}
    errors = {name: float((np.abs(rebuilt[:, i, j] - direct[:, i, j]) / scale).max()) for name, (i, j) in names.items()}
    trace_direct = direct[:, 0, 0] + direct[:, 1, 1]
    trace_error = float((np.abs(rec.delta(grid) - trace_direct) / np.maximum(1, np.abs(trace_direct))).max())
    det = rebuilt[:, 0, 0] * rebuilt[:, 1, 1] - rebuilt[:, 0, 1] * rebuilt[:, 1, 0]
    report = RoundtripReport(K, len(grid), rec.tau, float(abs(rec.tau - tau_of(p))), errors, trace_error, float(np.abs(det - 1).max()))
    logger.info(f"Round trip K={K}: max entry error {report.max_error:.3g}, τ error {report.tau_error:.3g}")
    return report
