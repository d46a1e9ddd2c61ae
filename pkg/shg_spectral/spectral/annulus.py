from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass
from typing import Callable
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from shg_spectral.monodromy import zeta
from shg_spectral.run_config import RunConfig, get_run_config


logger = logging.getLogger(__name__)

# Radii of the circles |λ| = const used inside S_0 stay below the minimum modulus (~37) of its outer boundary
_S0_CIRCLE_LOG_RADIUS = np.log(30.0)


@dataclass(frozen=True)
class ClosedContour:
    """
    Closed counter-clockwise curve in ℂ* given by a parametrization of [0, 1).

    Attributes:
        - parametrization (Callable): Vectorized map t -> λ, periodic with period 1.
        - n_points (int): Default number of samples.
    """
    parametrization: Callable[[NDArray[np.float64]], NDArray[np.complex128]]
    n_points: int

    def sample(self, n: int | None = None) -> NDArray[np.complex128]:
        n = self.n_points if n is None else n
        return self.parametrization(np.arange(n) / n)


@dataclass(frozen=True)
class Contour:
    """Signed sum of closed curves; the zero count is the signed sum of their windings."""
    components: tuple[tuple[ClosedContour, int], ...]

    @classmethod
    def single(cls, curve: ClosedContour) -> Contour:
        return cls(((curve, 1),))

    @classmethod
    def between(cls, outer: ClosedContour, inner: ClosedContour) -> Contour:
        """Boundary of the region between two nested curves."""
        return cls(((outer, 1), (inner, -1)))


def annulus_index(lam: complex) -> int:
    """
    Label k of the annulus S_k containing λ.

    |k| is fixed by (|k| - 1/2)π <= |ζ(λ)| <= (|k| + 1/2)π, the sign by |λ| > 1 or < 1.
    Points on a boundary go to the smaller |k|.
    """
    r = abs(zeta(lam)) / np.pi
    k_abs = max(0, int(np.ceil(r - 0.5)))
    if k_abs > 0 and abs((r - 0.5) - round(r - 0.5)) < 1e-14:
        logger.warning(f"λ={lam} lies on the boundary of S_{k_abs}; assigned to the smaller |k|.")
    if k_abs == 0:
        return 0
    return k_abs if abs(lam) > 1 else -k_abs

def _big_branch(zeta_values: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """λ = s² with s the root of s + 1/s = 4ζ outside the unit circle."""
    sq = np.sqrt(4 * zeta_values**2 - 1)
    s1 = 2 * zeta_values + sq
    s2 = 2 * zeta_values - sq
    s = np.where(np.abs(s1) >= np.abs(s2), s1, s2)
    return s**2

def _winding_about_origin(points: NDArray[np.complex128]) -> float:
    return float(np.sum(np.angle(np.roll(points, -1) / points)) / (2 * np.pi))

def level_curve(radius: float, big: bool) -> Callable[[NDArray[np.float64]], NDArray[np.complex128]]:
    """
    Parametrization of the curve |ζ(λ)| = radius (> 1/2) on the branch |λ| > 1 (big) or |λ| < 1.

    The half circle ζ = radius e^{iπt}, t ∈ [0, 1), covers the λ-curve once.
    """
    if radius <= 0.5:
        raise ValueError(f"Level curves need |ζ| > 1/2, got {radius}")

    def _big(t: NDArray[np.float64]) -> NDArray[np.complex128]:
        return _big_branch(radius * np.exp(1j * np.pi * np.asarray(t)))

    samples = _big(np.arange(16) / 16)
    orientation = 1 if _winding_about_origin(samples) > 0 else -1

    if big:
        return _big if orientation > 0 else (lambda t: _big(-np.asarray(t)))
    # Inversion λ -> 1/λ reverses the orientation
    return (lambda t: 1 / _big(-np.asarray(t))) if orientation > 0 else (lambda t: 1 / _big(np.asarray(t)))

def _circle(log_radius: float) -> Callable[[NDArray[np.float64]], NDArray[np.complex128]]:
    return lambda t: np.exp(log_radius + 2j * np.pi * np.asarray(t))

def boundary_points(j: int, big: bool, config: RunConfig | None = None) -> int:
    """Sample count of the level curve |ζ| = (j + 1/2)π."""
    config = config or get_run_config()
    return max(config.contour_min_points, config.contour_points_per_k * (abs(j) + 1))

def boundary_curve(j: int, big: bool, config: RunConfig | None = None) -> ClosedContour:
    """The curve |ζ| = (j + 1/2)π on one branch; it separates S_{±j} from S_{±(j+1)}."""
    if j < 0:
        raise ValueError(f"Boundary index must be >= 0, got {j}")
    return ClosedContour(level_curve((j + 0.5) * np.pi, big), boundary_points(j, big, config))

def annulus_curve(k: int, t: float, config: RunConfig | None = None) -> ClosedContour:
    """
    Nested family of curves inside S_k, t = 0 is the inner and t = 1 the outer boundary.

    For k != 0 the family consists of |ζ| level curves. Inside S_0 circles |λ| = const
    interpolate between the two boundary curves.
    """
    if not 0 <= t <= 1:
        raise ValueError(f"Curve parameter must lie in [0, 1], got {t}")
    n = boundary_points(abs(k), k >= 0, config)
    if k > 0:
        return ClosedContour(level_curve((k - 0.5 + t) * np.pi, True), n)
    if k < 0:
        return ClosedContour(level_curve((-k + 0.5 - t) * np.pi, False), n)
    if t == 0:
        return boundary_curve(0, False, config)
    if t == 1:
        return boundary_curve(0, True, config)
    return ClosedContour(_circle((2 * t - 1) * _S0_CIRCLE_LOG_RADIUS), n)

def annulus_contour(k: int, t0: float = 0.0, t1: float = 1.0, config: RunConfig | None = None) -> Contour:
    """Boundary of S_k, or of the sub-annulus between the nested curves t0 < t1."""
    return Contour.between(annulus_curve(k, t1, config), annulus_curve(k, t0, config))

def annulus_boundary(k: int, n: int | None = None, config: RunConfig | None = None) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Sampled (outer, inner) boundary curves of S_k, both counter-clockwise."""
    outer = annulus_curve(k, 1.0, config)
    inner = annulus_curve(k, 0.0, config)
    return outer.sample(n), inner.sample(n)

def total_contour(K: int, config: RunConfig | None = None) -> Contour:
    """Boundary of the union of S_k, |k| <= K."""
    return Contour.between(boundary_curve(K, True, config), boundary_curve(K, False, config))

def zeta_radii(k: int, radii: int) -> list[tuple[float, bool]]:
    """(|ζ|, big branch) pairs sampling S_k radially, boundaries included."""
    if k == 0:
        levels = np.linspace(np.pi / 6, np.pi / 2, radii)
        return [(float(r), big) for r in levels for big in (True, False)]
    levels = np.linspace((abs(k) - 0.5) * np.pi, (abs(k) + 0.5) * np.pi, radii)
    return [(float(r), k > 0) for r in levels]

def annulus_samples(k: int, radii: int | None = None, angles: int | None = None, config: RunConfig | None = None) -> NDArray[np.complex128]:
    """
    Sample points of S_k on radii x angles points of level curves, ζ-angles in [0, π).

    Args:
        k (int): Annulus label.
        radii (int | None): Number of ζ-radii, default config.annulus_radii.
        angles (int | None): Number of angles per radius, default config.annulus_angles.

    Returns:
        NDArray[np.complex128]: λ sample points.
    """
    config = config or get_run_config()
    radii = radii or config.annulus_radii
    angles = angles or config.annulus_angles
    t = np.arange(angles) / angles
    points = [level_curve(r, big)(t) for r, big in zeta_radii(k, radii)]
    return np.concatenate(points)

def local_radius(lam: ArrayLike, fraction: float) -> NDArray[np.float64] | float:
    """Local λ-scale fraction·|λ|/(1 + |ζ(λ)|), a small fraction of the annulus width near λ."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    radius = fraction * np.abs(lam_arr) / (1 + np.abs(np.atleast_1d(zeta(lam_arr))))
    return float(radius[0]) if np.ndim(lam) == 0 else radius
