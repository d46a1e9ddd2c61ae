from __future__ import annotations # Enable type annotation to be stored as string
from math import factorial
from typing import Callable
import logging

import numpy as np
from numpy.typing import NDArray

from shg_spectral.errors import ContourResolutionError, NewtonConvergenceError, ZeroOnContourError
from shg_spectral.run_config import RunConfig, get_run_config
from shg_spectral.spectral.annulus import ClosedContour, Contour


logger = logging.getLogger(__name__)

# Vectorized holomorphic function, λ of shape (n,) -> values of shape (n,) or (n, q)
HolomorphicMap = Callable[[NDArray[np.complex128]], NDArray[np.complex128]]


def _as_columns(values: NDArray[np.complex128]) -> NDArray[np.complex128]:
    values = np.asarray(values, dtype=complex)
    return values[:, None] if values.ndim == 1 else values

def winding_from_samples(values: NDArray[np.complex128]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Winding numbers of closed sampled curves about 0, one per column.

    Returns:
        tuple: (windings as floats, largest phase increment per column).
    """
    values = _as_columns(values)
    increments = np.angle(np.roll(values, -1, axis=0) / values)
    return increments.sum(axis=0) / (2 * np.pi), np.abs(increments).max(axis=0)

def curve_winding(f: HolomorphicMap, curve: ClosedContour, config: RunConfig | None = None) -> NDArray[np.int_]:
    """
    Winding numbers of f along one closed curve, with the sampling doubled until they are stable.

    The integer is accepted once two successive samplings agree and no phase increment exceeds π/2.

    Raises:
        ZeroOnContourError: If min |f| on the samples is below zero_on_contour_tol·max |f|.
        ContourResolutionError: If the winding is still unstable after contour_max_doublings doublings.
    """
    config = config or get_run_config()
    n = curve.n_points
    points = curve.sample(n)
    values = _as_columns(f(points))
    previous = None
    for doubling in range(config.contour_max_doublings + 1):
        modulus = np.abs(values)
        if np.any(modulus.min(axis=0) < config.zero_on_contour_tol * modulus.max(axis=0)):
            at = points[np.argmin(modulus.min(axis=1))]
            logger.error(f"Zero of f on the counting contour near λ={at}")
            raise ZeroOnContourError(f"f has a zero on the counting contour near λ={at}", {'lambda': [at.real, at.imag]})

        winding, max_step = winding_from_samples(values)
        rounded = np.rint(winding).astype(int)
        if previous is not None and np.array_equal(previous, rounded) and np.all(max_step < np.pi / 2):
            return rounded
        previous = rounded

        # Refine: the new samples interleave the previous ones
        new_points = curve.parametrization((np.arange(n) + 0.5) / n)
        new_values = _as_columns(f(new_points))
        merged_points = np.empty(2 * n, dtype=complex)
        merged_points[0::2], merged_points[1::2] = points, new_points
        merged_values = np.empty((2 * n, values.shape[1]), dtype=complex)
        merged_values[0::2], merged_values[1::2] = values, new_values
        points, values, n = merged_points, merged_values, 2 * n
        logger.debug(f"Contour sampling doubled to {n} points (doubling {doubling + 1})")

    logger.error(f"Winding number not stable after {config.contour_max_doublings} doublings ({n} samples)")
    raise ContourResolutionError(f"Winding number unstable after {config.contour_max_doublings} doublings", {'samples': n})

def count_zeros(f: HolomorphicMap, contour: Contour | ClosedContour, config: RunConfig | None = None) -> int | NDArray[np.int_]:
    """
    Number of zeros of f enclosed by the contour, by the argument principle.

    Args:
        f (HolomorphicMap): Vectorized function, holomorphic on and inside the contour. Functions
            returning several columns are counted column by column.
        contour (Contour | ClosedContour): Closed curve or signed sum of curves (e.g. an annulus boundary).

    Returns:
        int | NDArray[np.int_]: Zero count, or one count per column of f.
    """
    if isinstance(contour, ClosedContour):
        contour = Contour.single(contour)
    total = sum(sign * curve_winding(f, curve, config) for curve, sign in contour.components)
    total = np.asarray(total, dtype=int)
    return int(total[0]) if total.size == 1 else total

def taylor_coefficients(f: HolomorphicMap, center: complex, radius: float, n_points: int, n_coeffs: int) -> NDArray[np.complex128]:
    """
    Taylor coefficients a_0..a_{n_coeffs-1} of f at center by the Cauchy integral on a circle.

    a_n = mean(f(center + r e^{iθ}) e^{-inθ}) / r^n, evaluated with an FFT of the circle samples.
    """
    if n_coeffs > n_points:
        raise ValueError(f"Cannot extract {n_coeffs} coefficients from {n_points} circle points")
    theta = 2 * np.pi * np.arange(n_points) / n_points
    values = _as_columns(f(center + radius * np.exp(1j * theta)))
    coeffs = np.fft.fft(values, axis=0)[:n_coeffs] / n_points
    scale = radius ** np.arange(n_coeffs)
    coeffs = coeffs / scale[:, None]
    return coeffs[:, 0] if coeffs.shape[1] == 1 else coeffs

def cauchy_derivative(f: HolomorphicMap, center: complex, radius: float, n_points: int, order: int = 1) -> complex:
    """order-th derivative of f at center by Cauchy-integral differentiation."""
    return complex(taylor_coefficients(f, center, radius, n_points, order + 1)[order] * factorial(order))

def newton_refine(f: HolomorphicMap, seed: complex, radius_of: Callable[[complex], float], config: RunConfig | None = None, accept: Callable[[complex], bool] | None = None) -> complex:
    """
    Newton iteration λ <- λ - f/f' with f and f' read from the Cauchy coefficients on a small circle.

    Args:
        f (HolomorphicMap): Scalar vectorized function.
        seed (complex): Starting point.
        radius_of (Callable): Circle radius for the Cauchy coefficients at the current iterate.
        accept (Callable | None): Region test; an iterate outside it aborts the iteration.

    Returns:
        complex: The zero, converged to newton_tol relative to (1 + |λ|) or to the noise floor.

    Raises:
        NewtonConvergenceError: If an iterate leaves the accepted region or the iteration does not converge.
    """
    config = config or get_run_config()
    seed = complex(seed)
    lam = seed
    prev_step = np.inf
    for iteration in range(config.newton_max_iter):
        a0, a1 = taylor_coefficients(f, lam, radius_of(lam), config.cauchy_points, 2)
        if a1 == 0:
            break
        step = -a0 / a1
        step_size = abs(step)
        lam_new = lam + step
        if accept is not None and not accept(lam_new):
            logger.debug(f"Newton iterate {lam_new} left the accepted region at iteration {iteration}")
            raise NewtonConvergenceError(f"Newton iterate left its region starting from {seed}", {'seed': [seed.real, seed.imag], 'iterate': [lam_new.real, lam_new.imag]})
        lam = lam_new
        scale = 1 + abs(lam)
        if step_size <= config.newton_tol * scale:
            return lam
        # Noise floor of the integrator reached
        if step_size < 1e-8 * scale and step_size >= prev_step:
            return lam
        prev_step = step_size

    logger.error(f"Newton did not converge from seed {seed} in {config.newton_max_iter} iterations")
    raise NewtonConvergenceError(f"Newton did not converge from seed {seed}", {'seed': [seed.real, seed.imag], 'last': [lam.real, lam.imag]})

def deflated(f: HolomorphicMap, roots: list[complex]) -> HolomorphicMap:
    """f(λ) / ∏(λ - r) for already located roots r."""
    if not roots:
        return f
    roots_arr = np.asarray(roots, dtype=complex)

    def _g(lam: NDArray[np.complex128]) -> NDArray[np.complex128]:
        lam = np.asarray(lam, dtype=complex)
        return np.asarray(f(lam)) / np.prod(lam[:, None] - roots_arr[None, :], axis=1)
    return _g
