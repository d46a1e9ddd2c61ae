from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp

from shg_spectral.errors import IntegrationError
from shg_spectral.potential import PeriodicPotential, evaluate
from shg_spectral.run_config import RunConfig, get_run_config
from shg_spectral.utils.utility_classes import FrameSample, Matrix2C
from shg_spectral.utils.utils import as_complex_array, chunked, ordered_map


logger = logging.getLogger(__name__)

# Smallest rtol handed to DOP853, above its 100·eps floor
MIN_RTOL = 1e-13


################
# Vacuum closed forms
################

def _check_nonzero(lam: ArrayLike) -> NDArray[np.complex128]:
    lam = as_complex_array(lam)
    if np.any(lam == 0):
        logger.error("Spectral parameter λ = 0 is not allowed.")
        raise ValueError("Spectral parameter λ = 0 is not allowed, λ must lie in ℂ*.")
    return lam

def _unwrap_scalar(values: NDArray, like: ArrayLike) -> complex | NDArray:
    return complex(values[0]) if np.ndim(like) == 0 else values.reshape(np.shape(like))

def zeta(lam: ArrayLike) -> complex | NDArray[np.complex128]:
    """ζ(λ) = (λ^{1/2} + λ^{-1/2})/4 with the principal square root (cut on ℝ_{<0})."""
    s = np.sqrt(_check_nonzero(lam))
    return _unwrap_scalar((s + 1 / s) / 4, lam)

def vacuum_growth(lam: ArrayLike) -> NDArray[np.float64]:
    """e^{|Im ζ|}, the growth of the vacuum entries off the positive real axis."""
    return np.exp(np.abs(np.imag(np.atleast_1d(zeta(lam)))))

def vacuum_entries(lam: ArrayLike) -> tuple[NDArray[np.complex128], ...]:
    """Vectorized entries (a0, b0, c0, d0) of the vacuum monodromy."""
    s = np.sqrt(_check_nonzero(lam))
    z = (s + 1 / s) / 4
    cos_z = np.cos(z)
    sin_z = np.sin(z)
    return cos_z, -sin_z / s, s * sin_z, cos_z

def vacuum_monodromy(lam: complex) -> Matrix2C:
    """M0(λ) = [[cos ζ, -λ^{-1/2} sin ζ], [λ^{1/2} sin ζ, cos ζ]]; the entries are even in λ^{1/2}."""
    a0, b0, c0, d0 = vacuum_entries(lam)
    return Matrix2C(complex(a0[0]), complex(b0[0]), complex(c0[0]), complex(d0[0]))

def delta0(lam: ArrayLike) -> complex | NDArray[np.complex128]:
    """Vacuum discriminant Δ0 = 2 cos ζ."""
    return _unwrap_scalar(2 * np.cos(as_complex_array(zeta(lam))), lam)

def vacuum_generator(lam: complex) -> NDArray[np.complex128]:
    """Constant vacuum connection matrix A0(λ), M0 = exp(A0)."""
    _check_nonzero(lam)
    return 0.25 * np.array([[0, -(1 + 1 / lam)], [1 + lam, 0]], dtype=complex)

def lambda_k0(k: int) -> float:
    """
    Vacuum divisor node λ_{k,0} = 8π²k² + 4πk√(4π²k²-1) - 1.

    Negative labels use λ_{-k,0} = 1/λ_{k,0}, which avoids the cancellation of the closed form.
    """
    k = int(k)
    if k == 0:
        return -1.0
    if k < 0:
        return 1.0 / lambda_k0(-k)
    return 8 * np.pi**2 * k**2 + 4 * np.pi * k * np.sqrt(4 * np.pi**2 * k**2 - 1) - 1

def lambda_k0_array(labels: ArrayLike) -> NDArray[np.float64]:
    return np.array([lambda_k0(k) for k in np.atleast_1d(labels)], dtype=float)

def mu_k0(k: int) -> int:
    """μ_{k,0} = a0(λ_{k,0}) = (-1)^k."""
    return -1 if int(k) % 2 else 1

def lambda_k0_asymptote(k: int) -> float:
    """Leading behaviour of λ_{k,0}: 16π²k² - 2 for k > 0, 1/(16π²k²) + 1/(128π⁴k⁴) for k < 0."""
    k = int(k)
    if k == 0:
        return -1.0
    if k > 0:
        return 16 * np.pi**2 * k**2 - 2
    return 1 / (16 * np.pi**2 * k**2) + 1 / (128 * np.pi**4 * k**4)

def c0_derivative_at_node(k: int) -> float:
    """c0'(λ_{k,0}) = (-1)^k (1 - 1/λ_{k,0}) / 8."""
    return mu_k0(k) * (1 - 1 / lambda_k0(k)) / 8


################
# Connection form
################

@dataclass(frozen=True)
class ConnectionCoefficients:
    """Trigonometric interpolants of e^{u/2}, e^{-u/2} and u_y on a symmetric odd mode range."""
    modes: NDArray[np.int_]
    exp_plus_hat: NDArray[np.complex128]
    exp_minus_hat: NDArray[np.complex128]
    uy_hat: NDArray[np.complex128]

    def at(self, x: float) -> tuple[complex, complex, complex]:
        phases = np.exp(2j * np.pi * self.modes * x)
        return phases @ self.exp_plus_hat, phases @ self.exp_minus_hat, phases @ self.uy_hat

@lru_cache(maxsize=64)
def connection_coefficients(p: PeriodicPotential, grid: int) -> ConnectionCoefficients:
    """Sample e^{±u/2} on an odd grid of at least max(N, grid) points and keep all modes."""
    n = max(p.N, grid, 2 * p.J + 1)
    n += 1 - n % 2
    half = (n - 1) // 2
    x = np.arange(n) / n
    modes = np.arange(-half, half + 1)
    phases = np.exp(2j * np.pi * np.outer(x, p.modes))
    u_grid = phases @ p.u_hat
    exp_plus = np.fft.fft(np.exp(u_grid / 2)) / n
    exp_minus = np.fft.fft(np.exp(-u_grid / 2)) / n
    uy_hat = np.zeros(n, dtype=complex)
    uy_hat[p.modes + half] = p.uy_hat
    return ConnectionCoefficients(modes, exp_plus[modes % n], exp_minus[modes % n], uy_hat)

def alpha_x(p: PeriodicPotential, x: float, lam: complex) -> Matrix2C:
    """
    dx-part of the connection form,
    (1/4) [[i u_y, -e^{u/2} - λ^{-1} e^{-u/2}], [e^{u/2} + λ e^{-u/2}, -i u_y]].
    """
    _check_nonzero(lam)
    u, _, u_y = evaluate(p, x)
    e_plus, e_minus = np.exp(u / 2), np.exp(-u / 2)
    return Matrix2C(0.25j * u_y, -0.25 * (e_plus + e_minus / lam), 0.25 * (e_plus + lam * e_minus), -0.25j * u_y)

def alpha_y(p: PeriodicPotential, x: float, lam: complex) -> Matrix2C:
    """
    dy-part of the connection form,
    (i/4) [[-u_x, e^{u/2} - λ^{-1} e^{-u/2}], [e^{u/2} - λ e^{-u/2}, u_x]].
    """
    _check_nonzero(lam)
    u, u_x, _ = evaluate(p, x)
    e_plus, e_minus = np.exp(u / 2), np.exp(-u / 2)
    return Matrix2C(-0.25j * u_x, 0.25j * (e_plus - e_minus / lam), 0.25j * (e_plus - lam * e_minus), 0.25j * u_x)


################
# Frame integration
################

def _initial_step(lams: NDArray[np.complex128], config: RunConfig) -> float:
    # Oscillation frequency ~ |ζ| ~ max(|λ|^{1/2}, |λ|^{-1/2})/4
    root = np.sqrt(np.abs(lams))
    scale = np.minimum(1.0, np.minimum(4 / root, 4 * root))
    return float(config.first_step * scale.min())

def _integrate_chunk(p: PeriodicPotential, lams: NDArray[np.complex128], x_eval: NDArray[np.float64] | None, config: RunConfig) -> NDArray[np.complex128]:
    """Integrate F' = A(x, λ) F for every λ of the chunk as one stacked ODE. Returns shape (n_x, m, 2, 2)."""
    coeffs = connection_coefficients(p, config.frame_grid)
    m = lams.size
    inv_lams = 1 / lams

    def rhs(x: float, y: NDArray[np.complex128]) -> NDArray[np.complex128]:
        e_plus, e_minus, u_y = coeffs.at(x)
        F = y.reshape(m, 2, 2)
        a11 = 0.25j * u_y
        a12 = -0.25 * (e_plus + e_minus * inv_lams)
        a21 = 0.25 * (e_plus + e_minus * lams)
        out = np.empty_like(F)
        out[:, 0, :] = a11 * F[:, 0, :] + a12[:, None] * F[:, 1, :]
        out[:, 1, :] = a21[:, None] * F[:, 0, :] - a11 * F[:, 1, :]
        return out.ravel()

    y0 = np.tile(np.eye(2, dtype=complex), (m, 1, 1)).ravel()
    t_eval = np.array([1.0]) if x_eval is None else x_eval
    sol = solve_ivp(rhs, (0.0, 1.0), y0, method='DOP853', t_eval=t_eval, rtol=config.rtol, atol=config.atol, first_step=_initial_step(lams, config))
    if sol.status != 0:
        logger.error(f"Frame integration failed for {m} λ value(s): {sol.message}")
        raise IntegrationError(f"Frame integration failed: {sol.message}", {'lambda': [[float(l.real), float(l.imag)] for l in lams], 'solver_message': sol.message})
    frames = sol.y.T.reshape(len(t_eval), m, 2, 2)
    if x_eval is not None and x_eval.size and x_eval[0] == 0.0:
        frames[0] = np.eye(2)
    return frames

def extended_frame(p: PeriodicPotential, lam: complex, x_samples: Sequence[float], config: RunConfig | None = None) -> list[FrameSample]:
    """
    Solve F' = α_λ F with F(0) = 1 and return F at the sorted x_samples in [0, 1].

    Raises:
        IntegrationError: If the adaptive integrator fails (step-size underflow), with λ in the report.
    """
    config = config or get_run_config()
    lams = _check_nonzero(lam)
    x_eval = np.asarray(x_samples, dtype=float)
    if x_eval.size == 0:
        return []
    if np.any(np.diff(x_eval) < 0) or x_eval[0] < 0 or x_eval[-1] > 1:
        raise ValueError("x_samples must be sorted and lie in [0, 1].")
    frames = _integrate_chunk(p, lams, x_eval, config)
    return [FrameSample(float(x), Matrix2C.from_array(frames[i, 0])) for i, x in enumerate(x_eval)]

def determinant_defect(M: NDArray[np.complex128]) -> NDArray[np.float64]:
    """|det M - 1| relative to max(1, ‖M‖_F²), the scale of the cancellation in ad - bc."""
    M = np.asarray(M, dtype=complex).reshape(-1, 2, 2)
    det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    scale = np.maximum(1.0, (np.abs(M) ** 2).sum(axis=(1, 2)))
    return np.abs(det - 1) / scale

def _integrate_many(p: PeriodicPotential, lams: NDArray[np.complex128], config: RunConfig) -> NDArray[np.complex128]:
    def _run(chunk: NDArray[np.complex128]) -> NDArray[np.complex128] | IntegrationError:
        try:
            return _integrate_chunk(p, chunk, None, config)[0]
        except IntegrationError as err:
            return err

    results = ordered_map(_run, chunked(lams, config.chunk_size), config.threads)
    failures = [r for r in results if isinstance(r, IntegrationError)]
    if failures:
        failed = [lam for err in failures for lam in err.report.get('lambda', [])]
        logger.error(f"Monodromy integration failed for {len(failed)} λ value(s).")
        raise IntegrationError(f"Monodromy integration failed for {len(failed)} λ value(s).", {'lambda': failed})

    return np.concatenate(results, axis=0)

def monodromy_array(p: PeriodicPotential, lams: ArrayLike, config: RunConfig | None = None) -> NDArray[np.complex128]:
    """
    Monodromies for many λ as an array of shape (n, 2, 2).

    The λ values are split into chunks of config.chunk_size, each chunk is one stacked ODE.
    Chunks run in config.threads workers and results keep the input order. Failures of several
    chunks are aggregated into one IntegrationError.

    λ values whose relative determinant defect exceeds config.det_tol are integrated again with
    rtol and atol divided by 100, at most config.det_refinements times; defects left after that are
    logged as a warning.
    """
    config = config or get_run_config()
    lams = _check_nonzero(lams)
    if lams.size == 0:
        return np.zeros((0, 2, 2), dtype=complex)

    M = _integrate_many(p, lams, config)
    defect = determinant_defect(M)
    tight = config
    for _ in range(config.det_refinements):
        bad = defect > config.det_tol
        if not bad.any() or tight.rtol <= MIN_RTOL:
            break
        tight = tight.updated(rtol=max(tight.rtol / 100, MIN_RTOL), atol=tight.atol / 100)
        logger.debug(f"Determinant defect {defect.max():.3g} at {int(bad.sum())} λ value(s); integrating again with rtol={tight.rtol:g}")
        M[bad] = _integrate_many(p, lams[bad], tight)
        defect[bad] = determinant_defect(M[bad])
    if np.any(defect > config.det_tol):
        worst = lams[np.argmax(defect)]
        logger.warning(f"Relative determinant defect {defect.max():.3g} exceeds {config.det_tol:g} at {int((defect > config.det_tol).sum())} λ value(s), worst at λ={worst:.6g}")
    return M

def monodromy_batch(p: PeriodicPotential, lam_list: Sequence[complex], config: RunConfig | None = None) -> list[Matrix2C]:
    """Monodromies M(λ) for every λ of lam_list, in input order."""
    return [Matrix2C.from_array(M) for M in monodromy_array(p, lam_list, config)]

def monodromy(p: PeriodicPotential, lam: complex, config: RunConfig | None = None) -> Matrix2C:
    """Monodromy M(λ) = F_λ(1) with base point 0."""
    return monodromy_batch(p, [lam], config)[0]

def monodromy_at(p: PeriodicPotential, lam: complex, x0: float, config: RunConfig | None = None) -> Matrix2C:
    """Monodromy with base point x0 ∈ [0, 1], M_{x0} = F(x0) M F(x0)^{-1}."""
    if not 0 <= x0 <= 1:
        logger.error(f"Base point x0={x0} outside [0, 1].")
        raise ValueError(f"Base point x0={x0} must lie in [0, 1].")
    samples = extended_frame(p, lam, sorted({float(x0), 1.0}), config)
    F_x0 = samples[0].F
    M = samples[-1].F
    return F_x0 @ M @ F_x0.inverse()

def discriminant(p: PeriodicPotential, lams: ArrayLike, config: RunConfig | None = None) -> NDArray[np.complex128]:
    """Δ(λ) = tr M(λ), vectorized."""
    M = monodromy_array(p, lams, config)
    return M[:, 0, 0] + M[:, 1, 1]
