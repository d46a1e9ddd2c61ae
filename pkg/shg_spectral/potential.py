from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass, field
from typing import Mapping
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from shg_spectral.errors import BlowUpError
from shg_spectral.run_config import RunConfig, get_run_config


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PeriodicPotential:
    """
    Band-limited periodic Cauchy data (u, u_y) on [0, 1], u(x) = sum_{|j|<=J} u_hat[j] e^{2 pi i j x}.

    Attributes:
        - u_hat (NDArray[complex]): Fourier coefficients of u, index j + J.
        - uy_hat (NDArray[complex]): Fourier coefficients of u_y, index j + J.
        - J (int): Band limit.
        - N (int): Grid size for pointwise evaluation, N >= 4J + 4.
    """
    u_hat: NDArray[np.complex128]
    uy_hat: NDArray[np.complex128]
    J: int
    N: int = field(default=0)

    def __post_init__(self) -> None:
        if self.J < 0:
            logger.error(f"Band limit must be nonnegative, got J={self.J}")
            raise ValueError(f"Band limit must be nonnegative, got J={self.J}")
        u_hat = np.asarray(self.u_hat, dtype=complex).copy()
        uy_hat = np.asarray(self.uy_hat, dtype=complex).copy()
        if u_hat.shape != (2 * self.J + 1,) or uy_hat.shape != (2 * self.J + 1,):
            raise ValueError(f"Coefficient arrays must have shape ({2 * self.J + 1},), got {u_hat.shape} and {uy_hat.shape}")
        if not (np.all(np.isfinite(u_hat)) and np.all(np.isfinite(uy_hat))):
            raise ValueError("Potential coefficients must be finite.")
        u_hat.setflags(write=False)
        uy_hat.setflags(write=False)
        object.__setattr__(self, 'u_hat', u_hat)
        object.__setattr__(self, 'uy_hat', uy_hat)

        min_grid = 4 * self.J + 4
        if self.N == 0:
            object.__setattr__(self, 'N', max(min_grid, 16))
        elif self.N < min_grid:
            logger.error(f"Grid size N={self.N} is below the anti-aliasing margin 4J+4={min_grid}")
            raise ValueError(f"Grid size N={self.N} is below the anti-aliasing margin 4J+4={min_grid}")

        # Periodicity u(0) = u(1)
        u0 = self.u_hat.sum()
        u1 = np.sum(self.u_hat * np.exp(2j * np.pi * self.modes))
        if abs(u0 - u1) > 1e-14 * (1 + np.abs(self.u_hat).sum()):
            raise ValueError(f"Potential is not periodic: u(0)={u0}, u(1)={u1}")

    @property
    def modes(self) -> NDArray[np.int_]:
        return np.arange(-self.J, self.J + 1)

    @property
    def coeff_u(self) -> dict[int, complex]:
        return {int(j): complex(z) for j, z in zip(self.modes, self.u_hat)}

    @property
    def coeff_uy(self) -> dict[int, complex]:
        return {int(j): complex(z) for j, z in zip(self.modes, self.uy_hat)}

    def padded(self, J: int) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        """Coefficients zero-padded to band limit J >= self.J."""
        if J < self.J:
            raise ValueError(f"Cannot pad band limit {self.J} down to {J}")
        pad = J - self.J
        return np.pad(self.u_hat, pad), np.pad(self.uy_hat, pad)

    def grid(self, N: int | None = None) -> NDArray[np.float64]:
        N = self.N if N is None else N
        return np.arange(N) / N

    def is_vacuum(self) -> bool:
        return not (np.any(self.u_hat) or np.any(self.uy_hat))


class PotentialVariation(PeriodicPotential):
    """Tangent direction (δu, δu_y); same layout as PeriodicPotential."""
    pass


def vacuum() -> PeriodicPotential:
    """The solution u = 0."""
    return PeriodicPotential(np.zeros(1, dtype=complex), np.zeros(1, dtype=complex), 0)

def make_potential(coeff_u: Mapping[int, complex], coeff_uy: Mapping[int, complex], J: int | None = None, N: int | None = None) -> PeriodicPotential:
    """
    Build a potential from sparse Fourier coefficients.

    Args:
        coeff_u (Mapping[int, complex]): Mode j -> coefficient of u.
        coeff_uy (Mapping[int, complex]): Mode j -> coefficient of u_y.
        J (int | None): Band limit, at least the largest |j| given. Defaults to that largest |j|.
        N (int | None): Grid size, defaults to max(4J+4, 16).

    Returns:
        PeriodicPotential: The potential.
    """
    used = [abs(int(j)) for j in list(coeff_u) + list(coeff_uy)]
    J_min = max(used, default=0)
    if J is None:
        J = J_min
    if J < 0:
        logger.error(f"Band limit must be nonnegative, got J={J}")
        raise ValueError(f"Band limit must be nonnegative, got J={J}")
    if J < J_min:
        raise ValueError(f"Band limit J={J} is smaller than the largest mode {J_min}")

    u_hat = np.zeros(2 * J + 1, dtype=complex)
    uy_hat = np.zeros(2 * J + 1, dtype=complex)
    for j, z in coeff_u.items():
        u_hat[int(j) + J] += complex(z)
    for j, z in coeff_uy.items():
        uy_hat[int(j) + J] += complex(z)
    return PeriodicPotential(u_hat, uy_hat, J, N or 0)

def cosine_potential(amplitude: float, mode: int = 1) -> PeriodicPotential:
    """u = amplitude * cos(2 pi mode x), u_y = 0."""
    return make_potential({mode: amplitude / 2, -mode: amplitude / 2}, {})

def random_potential(seed: int, J: int, amplitude: float, decay_rate: float, real: bool = True) -> PeriodicPotential:
    """
    Draw a random analytic potential; the coefficient of mode j has magnitude <= amplitude * e^{-decay_rate |j|}.

    Args:
        seed (int): Seed of the numpy generator, the result is deterministic in it.
        J (int): Band limit.
        amplitude (float): Magnitude bound of the zero mode.
        decay_rate (float): Exponential decay rate of the magnitude bound, > 0.
        real (bool): If True, u and u_y are real-valued (Hermitian coefficients).

    Returns:
        PeriodicPotential: The potential.
    """
    if J < 0:
        logger.error(f"Band limit must be nonnegative, got J={J}")
        raise ValueError(f"Band limit must be nonnegative, got J={J}")
    if decay_rate <= 0:
        logger.error(f"decay_rate must be > 0, got {decay_rate}")
        raise ValueError(f"decay_rate must be > 0, got {decay_rate}")

    rng = np.random.default_rng(seed)
    modes = np.arange(-J, J + 1)
    bound = amplitude * np.exp(-decay_rate * np.abs(modes))

    def _draw() -> NDArray[np.complex128]:
        radius = rng.uniform(0.0, 1.0, size=modes.size)
        phase = rng.uniform(0.0, 2 * np.pi, size=modes.size)
        coeffs = bound * radius * np.exp(1j * phase)
        if real:
            # Hermitian symmetry, the zero mode is real
            coeffs[:J] = np.conj(coeffs[:J:-1])
            coeffs[J] = coeffs[J].real
        return coeffs

    u_hat = _draw()
    uy_hat = _draw()
    return PeriodicPotential(u_hat, uy_hat, J)

def potential_from_samples(u_values: ArrayLike, uy_values: ArrayLike, J: int) -> PeriodicPotential:
    """Project equispaced samples on [0, 1) onto the modes |j| <= J."""
    u_values = np.asarray(u_values, dtype=complex)
    uy_values = np.asarray(uy_values, dtype=complex)
    n = u_values.size
    if uy_values.size != n:
        raise ValueError(f"u and u_y sample counts differ: {n} vs {uy_values.size}")
    if n < 2 * J + 1:
        raise ValueError(f"{n} samples cannot resolve band limit J={J}")
    u_fft = np.fft.fft(u_values) / n
    uy_fft = np.fft.fft(uy_values) / n
    modes = np.arange(-J, J + 1)
    return PeriodicPotential(u_fft[modes % n], uy_fft[modes % n], J)

def evaluate_many(p: PeriodicPotential, x: ArrayLike) -> tuple[NDArray[np.complex128], NDArray[np.complex128], NDArray[np.complex128]]:
    """Vectorized (u, u_x, u_y) at the points x, reduced mod 1."""
    x = np.mod(np.atleast_1d(np.asarray(x, dtype=float)), 1.0)
    phases = np.exp(2j * np.pi * np.outer(x, p.modes))
    u = phases @ p.u_hat
    u_x = phases @ (2j * np.pi * p.modes * p.u_hat)
    u_y = phases @ p.uy_hat
    return u, u_x, u_y

def evaluate(p: PeriodicPotential, x: float) -> tuple[complex, complex, complex]:
    """(u, u_x, u_y) at x by trigonometric summation; u_x is the term-by-term derivative."""
    u, u_x, u_y = evaluate_many(p, [x])
    return complex(u[0]), complex(u_x[0]), complex(u_y[0])

def tau_of(p: PeriodicPotential) -> complex:
    """τ = e^{-u(0)/2} with u(0) from evaluation."""
    u0, _, _ = evaluate(p, 0.0)
    return complex(np.exp(-u0 / 2))

def translate_x(p: PeriodicPotential, x0: float) -> PeriodicPotential:
    """(u(x + x0), u_y(x + x0)): mode j is multiplied by e^{2 pi i j x0}."""
    shift = np.exp(2j * np.pi * p.modes * x0)
    return type(p)(p.u_hat * shift, p.uy_hat * shift, p.J, p.N)

def pot_inner(p: PeriodicPotential, q: PeriodicPotential) -> complex:
    """<u, ũ>_{W^{1,2}} + <u_y, ũ_y>_{L^2} by Parseval, conjugate-linear in q."""
    J = max(p.J, q.J)
    pu, puy = p.padded(J)
    qu, quy = q.padded(J)
    weights = 1 + (2 * np.pi * np.arange(-J, J + 1)) ** 2
    return complex(np.sum(weights * pu * np.conj(qu)) + np.sum(puy * np.conj(quy)))

def pot_norm(p: PeriodicPotential) -> float:
    return float(np.sqrt(pot_inner(p, p).real))

def variation(p: PeriodicPotential, seed: int, amplitude: float = 1.0, decay_rate: float = 1.0) -> PotentialVariation:
    """Random real analytic tangent direction with the band limit of p."""
    q = random_potential(seed, max(p.J, 1), amplitude, decay_rate)
    return PotentialVariation(q.u_hat, q.uy_hat, q.J, max(q.N, p.N))

def add_variation(p: PeriodicPotential, v: PeriodicPotential, h: float) -> PeriodicPotential:
    """p + h * v, on the larger of the two band limits."""
    J = max(p.J, v.J)
    pu, puy = p.padded(J)
    vu, vuy = v.padded(J)
    return PeriodicPotential(pu + h * vu, puy + h * vuy, J, max(p.N, v.N))

def _centered_to_fft(coeffs: NDArray[np.complex128], J: int, n: int) -> NDArray[np.complex128]:
    out = np.zeros(n, dtype=complex)
    out[np.arange(-J, J + 1) % n] = coeffs
    return out

def evolve_y(p: PeriodicPotential, y_target: float, n_steps: int, filter_cutoff: int, config: RunConfig | None = None) -> PeriodicPotential:
    """
    Exploratory y-evolution of the Cauchy data through u_yy = -u_xx - sinh(u).

    Pseudo-spectral velocity-Verlet stepping in y; modes above filter_cutoff are removed after every
    half step. The y-Cauchy problem of an elliptic equation is ill-posed, so only small |y_target| on
    analytic data is meaningful.

    Args:
        p (PeriodicPotential): Cauchy data at y = 0.
        y_target (float): Height to evolve to, may be negative.
        n_steps (int): Number of Verlet steps.
        filter_cutoff (int): Largest retained mode index, also the band limit of the result.
        config (RunConfig | None): Provides blowup_bound.

    Returns:
        PeriodicPotential: Cauchy data at height y_target.

    Raises:
        BlowUpError: If a coefficient magnitude exceeds config.blowup_bound.
    """
    if y_target == 0:
        return p
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if filter_cutoff < 0:
        raise ValueError(f"filter_cutoff must be >= 0, got {filter_cutoff}")
    config = config or get_run_config()

    J_out = max(filter_cutoff, 0)
    n = max(p.N, 4 * J_out + 4, 4 * p.J + 4)
    wavenumbers = np.fft.fftfreq(n, d=1.0 / n)
    keep = np.abs(wavenumbers) <= filter_cutoff
    laplace = (2 * np.pi * wavenumbers) ** 2

    u_hat = _centered_to_fft(p.u_hat, p.J, n) * keep
    v_hat = _centered_to_fft(p.uy_hat, p.J, n) * keep

    def _force(u_hat: NDArray[np.complex128]) -> NDArray[np.complex128]:
        # -u_xx - sinh(u) in Fourier space, sinh evaluated on the grid
        u_grid = np.fft.ifft(u_hat) * n
        return (laplace * u_hat - np.fft.fft(np.sinh(u_grid)) / n) * keep

    h = y_target / n_steps
    force = _force(u_hat)
    for step in range(n_steps):
        v_half = v_hat + 0.5 * h * force
        u_hat = u_hat + h * v_half
        force = _force(u_hat)
        v_hat = v_half + 0.5 * h * force

        peak = max(np.abs(u_hat).max(), np.abs(v_hat).max())
        if not np.isfinite(peak) or peak > config.blowup_bound:
            y_reached = (step + 1) * h
            logger.error(f"evolve_y blew up at y={y_reached:.4g} (max coefficient {peak:.3g} > {config.blowup_bound:.3g})")
            raise BlowUpError(f"Coefficient bound exceeded at y={y_reached:.6g}", {'y': y_reached, 'step': step + 1, 'max_coefficient': float(peak) if np.isfinite(peak) else None})

    modes = np.arange(-J_out, J_out + 1)
    return PeriodicPotential(u_hat[modes % n], v_hat[modes % n], J_out, max(n, 4 * J_out + 4))
