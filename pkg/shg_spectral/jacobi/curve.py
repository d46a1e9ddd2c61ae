from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from shg_spectral.errors import PeriodMatrixError
from shg_spectral.run_config import RunConfig, get_run_config
from shg_spectral.utils.utility_classes import BranchPair, BranchPointSet
from shg_spectral.utils.utils import as_complex_array


logger = logging.getLogger(__name__)

# Candidate directions of the cut joining 0 to infinity, tried in order
CUT_ANGLES = (np.pi, 3 * np.pi / 4, 5 * np.pi / 4, np.pi / 2, 3 * np.pi / 2)
# Smallest angle allowed between the (0, ∞) cut and a gap, seen from 0
CUT_MARGIN = 0.05


@dataclass(frozen=True)
class Gap:
    """Open gap of the finite-genus model: the cut along the segment [e1, e2].

    Attributes:
        k: int: Annulus label of the gap.
        e1: complex: First endpoint.
        e2: complex: Second endpoint, where the B-cycle path starts."""
    k: int
    e1: complex
    e2: complex

    @property
    def center(self) -> complex:
        return (self.e1 + self.e2) / 2

    @property
    def half_width(self) -> complex:
        """Complex half width r with e2 = center + r."""
        return (self.e2 - self.e1) / 2

    @property
    def width(self) -> float:
        return abs(self.e2 - self.e1)

    def joukowski(self, w: ArrayLike) -> NDArray[np.complex128]:
        """λ(w) = m + r(w + 1/w)/2; the unit circle covers the cut twice."""
        w = as_complex_array(w)
        return self.center + self.half_width * (w + 1 / w) / 2

    def inverse_joukowski(self, lam: ArrayLike) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        """The two preimages (w_out, w_in = 1/w_out) of λ, |w_out| >= 1."""
        xi = (as_complex_array(lam) - self.center) / self.half_width
        root = np.sqrt(xi - 1) * np.sqrt(xi + 1)
        w_a, w_b = xi + root, xi - root
        w_out = np.where(np.abs(w_a) >= np.abs(w_b), w_a, w_b)
        return w_out, 1 / w_out

    def factor(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """G(λ) = (λ - m)·(1 - r²/(λ - m)²)^{1/2}, a square root of (λ - e1)(λ - e2) with its cut on the segment."""
        shifted = as_complex_array(lam) - self.center
        with np.errstate(divide='ignore', invalid='ignore'):
            return shifted * np.sqrt(1 - (self.half_width / shifted) ** 2)

    def ellipse(self, rho: float, n: int) -> NDArray[np.complex128]:
        """Closed counterclockwise polygon |w| = rho around the cut, first point repeated at the end."""
        theta = np.linspace(0.0, 2 * np.pi, n + 1)
        return self.joukowski(rho * np.exp(1j * theta))

    def outside(self, lam: ArrayLike, rho: float) -> NDArray[np.bool_]:
        """True where λ lies outside the ellipse |w| = rho."""
        w_out, _ = self.inverse_joukowski(lam)
        return np.abs(w_out) > rho


def _segment_distance(p: complex, a: complex, b: complex) -> float:
    ab = b - a
    t = 0.0 if ab == 0 else min(max(((p - a) * np.conj(ab)).real / abs(ab) ** 2, 0.0), 1.0)
    return abs(p - (a + t * ab))

def segments_cross(a1: complex, a2: complex, b1: complex, b2: complex) -> bool:
    """Proper crossing test of the closed segments [a1, a2] and [b1, b2]."""
    def _cross(u: complex, v: complex) -> float:
        return (np.conj(u) * v).imag

    d1 = _cross(b2 - b1, a1 - b1)
    d2 = _cross(b2 - b1, a2 - b1)
    d3 = _cross(a2 - a1, b1 - a1)
    d4 = _cross(a2 - a1, b2 - a1)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    # Touching endpoints
    scale = 1 + max(abs(a1), abs(a2), abs(b1), abs(b2))
    return min(_segment_distance(a1, b1, b2), _segment_distance(a2, b1, b2),
               _segment_distance(b1, a1, a2), _segment_distance(b2, a1, a2)) < 1e-14 * scale

def wrap_angle(angle: ArrayLike) -> NDArray[np.float64]:
    """Angle in (-π, π]."""
    return np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2 * np.pi)

def ray_clear_of(gaps: Iterable[Gap], angle: float, margin: float = CUT_MARGIN) -> bool:
    """True if the ray from 0 in the given direction keeps an angular distance margin from every gap."""
    for gap in gaps:
        d1 = float(wrap_angle(np.angle(gap.e1) - angle))
        d2 = float(wrap_angle(np.angle(gap.e2) - angle))
        if d1 * d2 <= 0 and abs(d1 - d2) < np.pi:
            return False
        if min(abs(d1), abs(d2)) < margin:
            return False
    return True


@dataclass(frozen=True)
class FiniteGenusCurve:
    """
    Hyperelliptic model y² = λ·∏_j (λ - e_{j,1})(λ - e_{j,2}) of a spectral curve with finitely many open gaps.

    The branch points 0 and ∞ are joined by a ray leaving 0 at cut_angle; every gap carries its
    own cut along the segment joining its endpoints. The sheet is fixed by Re y(λ_ref) > 0 at a
    real λ_ref right of all gaps.

    Attributes:
        - gaps (tuple[Gap, ...]): Open gaps, sorted by label.
        - cut_angle (float): Direction of the (0, ∞) cut.
        - sign (float): ±1, the sheet normalization.
    """
    gaps: tuple[Gap, ...]
    cut_angle: float
    sign: float

    @property
    def genus(self) -> int:
        return len(self.gaps)

    @cached_property
    def labels(self) -> list[int]:
        return [gap.k for gap in self.gaps]

    @cached_property
    def endpoints(self) -> NDArray[np.complex128]:
        """The 2g finite nonzero branch points e."""
        return np.array([e for gap in self.gaps for e in (gap.e1, gap.e2)], dtype=complex)

    def gap_index(self, k: int) -> int:
        for j, gap in enumerate(self.gaps):
            if gap.k == k:
                return j
        raise KeyError(f"No open gap with label {k}; open gaps are {self.labels}.")

    def sqrt_cut(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """λ^{1/2} with its cut along the ray at cut_angle."""
        rotation = np.exp(1j * (np.pi - self.cut_angle))
        return np.sqrt(as_complex_array(lam) * rotation) / np.sqrt(rotation)

    def reduced(self, j: int, lam: ArrayLike) -> NDArray[np.complex128]:
        """y(λ)/G_j(λ): the model without the factor of gap j, analytic across cut j."""
        lam = as_complex_array(lam)
        value = self.sign * self.sqrt_cut(lam)
        for l, gap in enumerate(self.gaps):
            if l != j:
                value = value * gap.factor(lam)
        return value

    def y(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """y(λ) on the normalized sheet, continuous off the cuts."""
        return self.reduced(-1, lam)

    def sheet_values(self, lam: ArrayLike) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        """Values (y, -y) of the two sheets over λ, exchanged by σ."""
        values = self.y(lam)
        return values, -values

    def local_y(self, j: int, w: ArrayLike) -> NDArray[np.complex128]:
        """y at the point with Joukowski coordinate w of gap j; w and 1/w are the two sheets."""
        w = as_complex_array(w)
        gap = self.gaps[j]
        return self.reduced(j, gap.joukowski(w)) * gap.half_width * (w - 1 / w) / 2

    def polynomial(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """λ·∏(λ - e)."""
        lam = as_complex_array(lam)
        return lam * np.prod(lam[:, None] - self.endpoints[None, :], axis=1)

    def residual(self, lam: ArrayLike) -> float:
        """max |y² - λ∏(λ - e)| / (1 + |λ∏(λ - e)|) over the sample."""
        lam = as_complex_array(lam)
        target = self.polynomial(lam)
        return float(np.max(np.abs(self.y(lam) ** 2 - target) / (1 + np.abs(target)), initial=0.0))

    @cached_property
    def reference_point(self) -> float:
        """Real λ_ref > 0 right of every branch point."""
        right = max((e.real for e in self.endpoints), default=0.0)
        return max(right, 0.0) + 1.0 + max((gap.width for gap in self.gaps), default=0.0)


################
# Construction
################

def _validate_gaps(gaps: list[Gap], config: RunConfig) -> None:
    for gap in gaps:
        scale = 1 + abs(gap.center)
        if gap.width < config.double_point_tol * scale:
            logger.error(f"Gap k={gap.k} is closed (width {gap.width:.3g})")
            raise ValueError(f"Gap k={gap.k} is a double point and cannot be opened in the model.")
        if _segment_distance(0j, gap.e1, gap.e2) < config.double_point_tol * scale:
            logger.error(f"Gap k={gap.k} contains λ=0")
            raise PeriodMatrixError(f"Gap k={gap.k} contains the branch point 0", {'k': gap.k})
    for i, first in enumerate(gaps):
        for second in gaps[i + 1:]:
            if segments_cross(first.e1, first.e2, second.e1, second.e2):
                logger.error(f"Cuts of gaps k={first.k} and k={second.k} overlap")
                raise PeriodMatrixError(f"Overlapping cuts k={first.k}, k={second.k}", {'labels': [first.k, second.k]})

def _choose_cut_angle(gaps: list[Gap]) -> float:
    for angle in CUT_ANGLES:
        if ray_clear_of(gaps, angle):
            return float(angle)
    logger.error(f"No cut direction for (0, ∞) avoids the gaps {[gap.k for gap in gaps]}")
    raise PeriodMatrixError("No admissible direction for the (0, ∞) cut", {'labels': [gap.k for gap in gaps]})

def make_curve_from_gaps(gaps: Iterable[Gap], config: RunConfig | None = None) -> FiniteGenusCurve:
    """
    Build the model from explicit gaps.

    Raises:
        ValueError: If a gap is closed.
        PeriodMatrixError: If cuts overlap, a gap contains 0, or no (0, ∞) cut direction is free.
    """
    config = config or get_run_config()
    gaps = sorted(gaps, key=lambda gap: gap.k)
    _validate_gaps(gaps, config)
    angle = _choose_cut_angle(gaps)
    if angle != np.pi:
        logger.debug(f"(0, ∞) cut rotated to angle {angle:.4f}")
    curve = FiniteGenusCurve(tuple(gaps), angle, 1.0)
    y_ref = complex(curve.y([curve.reference_point])[0])
    sign = 1.0 if y_ref.real > 0 else -1.0
    return FiniteGenusCurve(tuple(gaps), angle, sign)

def make_curve(branch_points: BranchPointSet, open_gap_indices: Iterable[int], config: RunConfig | None = None) -> FiniteGenusCurve:
    """
    Finite-genus model on the selected open gaps of a branch point set.

    Args:
        branch_points (BranchPointSet): Branch points of the spectral curve.
        open_gap_indices (Iterable[int]): Annulus labels of the gaps kept open.
        config (RunConfig | None): Provides double_point_tol.

    Returns:
        FiniteGenusCurve: Model of genus len(open_gap_indices).

    Raises:
        ValueError: If a label is unknown or its gap is a double point.
        PeriodMatrixError: If the cut layout is inconsistent.
    """
    gaps = []
    for k in sorted(set(int(k) for k in open_gap_indices)):
        try:
            pair = branch_points.pair(k)
        except KeyError as err:
            logger.error(f"Requested gap k={k} outside the branch point set (K={branch_points.K})")
            raise ValueError(f"Unknown gap label {k}; valid labels are {list(branch_points.labels)}.") from err
        if pair.double:
            logger.error(f"Requested gap k={k} is a double point")
            raise ValueError(f"Gap k={k} is closed (double point).")
        gaps.append(Gap(k, pair.kappa1, pair.kappa2))
    curve = make_curve_from_gaps(gaps, config)
    logger.info(f"Finite-genus model of genus {curve.genus} on gaps {curve.labels}")
    return curve

def gap_size(pair: BranchPair) -> float:
    """Gap width measured in ζ: |κ1 - κ2|·|ζ'(λ)| at the gap center, symmetric under λ -> 1/λ."""
    lam = pair.midpoint
    return pair.width * abs(1 - 1 / lam) / (8 * abs(np.sqrt(complex(lam))))

def widest_gaps(branch_points: BranchPointSet, n_gaps: int) -> list[int]:
    """Labels of the n_gaps largest open gaps by gap_size, in label order."""
    if n_gaps < 0:
        raise ValueError(f"n_gaps must be >= 0, got {n_gaps}")
    open_pairs = [pair for pair in branch_points if not pair.double]
    ranked = sorted(open_pairs, key=lambda pair: (-gap_size(pair), abs(pair.k), pair.k))
    return sorted(pair.k for pair in ranked[:n_gaps])
