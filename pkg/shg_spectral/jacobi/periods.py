from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass
import logging

import numpy as np
from numpy.polynomial.chebyshev import chebgauss
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike, NDArray

from shg_spectral.errors import PeriodMatrixError
from shg_spectral.jacobi.curve import CUT_MARGIN, FiniteGenusCurve, segments_cross, wrap_angle
from shg_spectral.run_config import RunConfig, get_run_config
from shg_spectral.spectral.contour import winding_from_samples
from shg_spectral.utils.utils import as_complex_array


logger = logging.getLogger(__name__)

# Turning angles tried for the B-paths, in order
PATH_TURNS = (np.pi / 4, -np.pi / 4, np.pi / 2, -np.pi / 2, 3 * np.pi / 4, -3 * np.pi / 4)
MAX_CONDITION = 1e12
ELLIPSE_RHO = 1.25
CERTIFICATE_POINTS = 400


def form_degrees(g: int) -> list[tuple[int, int]]:
    """
    Vanishing orders of λ^i dλ/y, i < g, in the local coordinates at the branch points 0 and ∞.

    At 0 the coordinate is t = λ^{1/2}, giving t^{2i}; at ∞ it is t = λ^{-1/2}, giving t^{2g-2i-2}.
    Both are nonnegative for 0 <= i <= g - 1, so the candidate forms are holomorphic.
    """
    if g < 0:
        raise ValueError(f"Genus must be >= 0, got {g}")
    return [(2 * i, 2 * g - 2 * i - 2) for i in range(g)]

def _powers(lam: NDArray[np.complex128], g: int) -> NDArray[np.complex128]:
    return lam[:, None] ** np.arange(g)[None, :]


################
# A-periods and dual basis
################

def a_periods(curve: FiniteGenusCurve, n_nodes: int | None = None, config: RunConfig | None = None) -> NDArray[np.complex128]:
    """
    Matrix P[k, i] = ∮_{A_k} λ^i dλ/y, A_k the counterclockwise loop around gap k on the normalized sheet.

    On gap k, λ = m + r cos θ turns dλ/G_k into i dθ, so the period is 2i ∫_{-1}^{1} F(m + rt) dt/√(1 - t²)
    with F = λ^i/(y/G_k) smooth; Gauss-Chebyshev nodes integrate it spectrally.
    """
    config = config or get_run_config()
    n_nodes = n_nodes or config.quadrature_nodes
    g = curve.genus
    if g == 0:
        return np.zeros((0, 0), dtype=complex)
    t, weights = chebgauss(n_nodes)
    P = np.empty((g, g), dtype=complex)
    for k, gap in enumerate(curve.gaps):
        lam = gap.center + gap.half_width * t
        integrand = _powers(lam, g) / curve.reduced(k, lam)[:, None]
        P[k] = 2j * (weights @ integrand)
    return P


@dataclass(frozen=True)
class DualFormBasis:
    """
    Holomorphic forms ω_n = Σ_i C[n, i] λ^i dλ/y normalized by ∮_{A_k} ω_n = δ_{kn}.

    Attributes:
        - coefficients (NDArray[np.complex128]): C, shape (g, g).
        - a_period_matrix (NDArray[np.complex128]): P[k, i] of the candidate forms.
        - b_period_matrix (NDArray[np.complex128]): Ω[n, l] = ∮_{B_l} ω_n, column l is β^{[l]}.
        - condition (float): Condition number of the column-equilibrated P.
        - n_nodes (int): Quadrature nodes used.
    """
    coefficients: NDArray[np.complex128]
    a_period_matrix: NDArray[np.complex128]
    b_period_matrix: NDArray[np.complex128]
    condition: float
    n_nodes: int

    @property
    def genus(self) -> int:
        return self.coefficients.shape[0]

    def normalized_a_periods(self) -> NDArray[np.complex128]:
        """∮_{A_k} ω_n as [n, k]; the identity up to quadrature error."""
        return self.coefficients @ self.a_period_matrix.T

    def integrand(self, curve: FiniteGenusCurve, lam: ArrayLike) -> NDArray[np.complex128]:
        """ω_n/dλ at λ on the normalized sheet, shape (len(λ), g)."""
        lam = as_complex_array(lam)
        return (_powers(lam, self.genus) / curve.y(lam)[:, None]) @ self.coefficients.T

    def normalize(self, candidate_integrals: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """Map integrals of the candidate forms λ^i dλ/y (last axis i) to integrals of the ω_n."""
        return candidate_integrals @ self.coefficients.T


def _dual_coefficients(P: NDArray[np.complex128]) -> tuple[NDArray[np.complex128], float]:
    if P.size == 0:
        return np.zeros((0, 0), dtype=complex), 1.0
    scale = np.abs(P).max(axis=0)
    if np.any(scale == 0):
        logger.error("A-period matrix has a vanishing column")
        raise PeriodMatrixError("Singular A-period matrix", {'condition': None})
    condition = float(np.linalg.cond(P / scale[None, :]))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        logger.error(f"A-period matrix is ill-conditioned (cond {condition:.3g})")
        raise PeriodMatrixError(f"Ill-conditioned A-period matrix (cond {condition:.3g})", {'condition': condition if np.isfinite(condition) else None})
    return np.linalg.inv(P).T, condition

def dual_forms(curve: FiniteGenusCurve, n_nodes: int | None = None, config: RunConfig | None = None) -> DualFormBasis:
    """
    Dual basis of holomorphic forms and its B-periods.

    Raises:
        PeriodMatrixError: If the A-period matrix is singular or ill-conditioned.
    """
    config = config or get_run_config()
    n_nodes = n_nodes or config.quadrature_nodes
    P = a_periods(curve, n_nodes, config)
    C, condition = _dual_coefficients(P)
    partial = DualFormBasis(C, P, np.zeros((curve.genus, curve.genus), dtype=complex), condition, n_nodes)
    basis = DualFormBasis(C, P, b_periods(curve, partial), condition, n_nodes)
    logger.debug(f"Dual forms of genus {curve.genus}: cond(P) = {condition:.3g}")
    return basis


################
# B-cycles
################

@dataclass(frozen=True)
class BPath:
    """
    Path on the normalized sheet from the gap endpoint e_{j,2} to the branch point 0.

    λ(s) = |e|(1 - s)² exp(i(arg e + turn·(2s - s²))), s in [0, 1]: it leaves the gap at an angle to
    its cut and reaches 0 along a fixed direction. The B-cycle runs from 0 to e on this sheet and
    back on the other one.
    """
    start: complex
    turn: float

    def point(self, s: ArrayLike) -> NDArray[np.complex128]:
        s = np.asarray(s, dtype=float)
        angle = np.angle(self.start) + self.turn * (2 * s - s**2)
        return abs(self.start) * (1 - s) ** 2 * np.exp(1j * angle)

    def derivative(self, s: ArrayLike) -> NDArray[np.complex128]:
        s = np.asarray(s, dtype=float)
        angle = np.angle(self.start) + self.turn * (2 * s - s**2)
        return abs(self.start) * np.exp(1j * angle) * (1 - s) * (-2 + 2j * self.turn * (1 - s) ** 2)

    def samples(self, n: int) -> NDArray[np.complex128]:
        return self.point(np.linspace(0.0, 1.0, n + 1))

    def integrate(self, curve: FiniteGenusCurve, g: int, n_nodes: int) -> NDArray[np.complex128]:
        """∫ λ^i dλ/y from start to 0, with s = (1 - cos πu)/2 clustering nodes at both ends."""
        x, weights = leggauss(n_nodes)
        u = (x + 1) / 2
        s = (1 - np.cos(np.pi * u)) / 2
        ds = np.pi * np.sin(np.pi * u) / 2
        lam = self.point(s)
        integrand = _powers(lam, g) * (self.derivative(s) * ds / curve.y(lam))[:, None]
        return (weights / 2) @ integrand


def ellipse_radii(curve: FiniteGenusCurve, max_halvings: int = 8) -> NDArray[np.float64]:
    """Parameters rho_j > 1 of disjoint A-loops |w| = rho_j that keep 0, the other gaps and the (0, ∞) cut outside."""
    rhos = np.full(curve.genus, ELLIPSE_RHO)
    for _ in range(max_halvings):
        conflict = np.zeros(curve.genus, dtype=bool)
        for j, gap in enumerate(curve.gaps):
            loop = gap.ellipse(rhos[j], 128)
            if not gap.outside([0.0], rhos[j])[0]:
                conflict[j] = True
            if np.any(np.abs(wrap_angle(np.angle(loop) - curve.cut_angle)) < CUT_MARGIN / 2):
                conflict[j] = True
            for l, other in enumerate(curve.gaps):
                if l != j and not np.all(other.outside(loop, rhos[l])):
                    conflict[j] = conflict[l] = True
        if not conflict.any():
            return rhos
        rhos[conflict] = 1 + (rhos[conflict] - 1) / 2
    logger.error(f"Could not separate the A-loops of gaps {curve.labels}")
    raise PeriodMatrixError("A-loops cannot be separated", {'labels': curve.labels})

def _path_admissible(curve: FiniteGenusCurve, j: int, path: BPath, rhos: NDArray[np.float64]) -> bool:
    points = path.samples(CERTIFICATE_POINTS)
    inner = points[1:-1]
    # Angle seen from 0 stays off the (0, ∞) cut
    if np.any(np.abs(wrap_angle(np.angle(inner) - curve.cut_angle)) < CUT_MARGIN / 2):
        return False
    for l, gap in enumerate(curve.gaps):
        if l != j and not np.all(gap.outside(points, rhos[l])):
            return False
    own = curve.gaps[j]
    return not any(segments_cross(a, b, own.e1, own.e2) for a, b in zip(points[1:-1], points[2:]))

def b_paths(curve: FiniteGenusCurve, rhos: NDArray[np.float64] | None = None) -> list[BPath]:
    """
    One admissible path per gap from e_{j,2} to 0.

    Raises:
        PeriodMatrixError: If no turning angle avoids the other cuts.
    """
    rhos = ellipse_radii(curve) if rhos is None else rhos
    paths = []
    for j, gap in enumerate(curve.gaps):
        for turn in PATH_TURNS:
            path = BPath(gap.e2, turn)
            if _path_admissible(curve, j, path, rhos):
                paths.append(path)
                break
        else:
            logger.error(f"No admissible B-path for gap k={gap.k}")
            raise PeriodMatrixError(f"No admissible B-path for gap k={gap.k}", {'k': gap.k})
    return paths

def b_period_integrals(curve: FiniteGenusCurve, n_nodes: int, paths: list[BPath] | None = None) -> NDArray[np.complex128]:
    """Matrix Q[i, l] = ∮_{B_l} λ^i dλ/y = 2∫_0^{e_{l,2}} λ^i dλ/y."""
    g = curve.genus
    paths = b_paths(curve) if paths is None else paths
    Q = np.empty((g, g), dtype=complex)
    for l, path in enumerate(paths):
        Q[:, l] = -2 * path.integrate(curve, g, n_nodes)
    return Q

def b_periods(curve: FiniteGenusCurve, basis: DualFormBasis) -> NDArray[np.complex128]:
    """Ω[n, l] = ∮_{B_l} ω_n; column l is the B-period vector β^{[l]}."""
    if curve.genus == 0:
        return np.zeros((0, 0), dtype=complex)
    return basis.coefficients @ b_period_integrals(curve, basis.n_nodes)


################
# Cycle certificates
################

def signed_intersection(a: NDArray[np.complex128], b: NDArray[np.complex128]) -> int:
    """
    Algebraic intersection number of two polylines in the plane.

    Each proper crossing counts sign(Im(conj(da)·db)), +1 when b crosses a from right to left;
    touching endpoints do not count.
    """
    def _cross(u: NDArray[np.complex128], v: NDArray[np.complex128]) -> NDArray[np.float64]:
        return (np.conj(u) * v).imag

    a0, a1 = a[:-1, None], a[1:, None]
    b0, b1 = b[None, :-1], b[None, 1:]
    da, db = a1 - a0, b1 - b0
    d1, d2 = _cross(db, a0 - b0), _cross(db, a1 - b0)
    d3, d4 = _cross(da, b0 - a0), _cross(da, b1 - a0)
    hit = (d1 * d2 < 0) & (d3 * d4 < 0)
    return int(np.sign(_cross(da, db))[hit].sum())

def winding_number(loop: NDArray[np.complex128], point: complex) -> int:
    """Winding number of a closed polygon (first point repeated) about a point."""
    winding, _ = winding_from_samples(loop[:-1] - point)
    return int(np.floor(0.5 + winding[0]))


@dataclass(frozen=True)
class CycleSystem:
    """
    Realization of the canonical cycles with their intersection certificates.

    Attributes:
        - rhos (NDArray[np.float64]): Parameters of the A-loops |w| = rho in each gap's Joukowski coordinate.
        - paths (list[BPath]): B-path per gap on the normalized sheet.
        - a_loops (list[NDArray[np.complex128]]): Closed counterclockwise polygons of the A-cycles.
        - b_lines (list[NDArray[np.complex128]]): Polylines of the B-cycles on the normalized sheet, from 0 to e_{j,2}.
        - AB (NDArray[np.int_]): Intersection numbers A_k × B_l.
        - AA (NDArray[np.int_]): Intersection numbers A_k × A_l.
        - BB (NDArray[np.int_]): Intersection numbers B_k × B_l away from 0.
        - enclosure (NDArray[np.int_]): Winding number of A_k about the center of gap l.
    """
    rhos: NDArray[np.float64]
    paths: list[BPath]
    a_loops: list[NDArray[np.complex128]]
    b_lines: list[NDArray[np.complex128]]
    AB: NDArray[np.int_]
    AA: NDArray[np.int_]
    BB: NDArray[np.int_]
    enclosure: NDArray[np.int_]

    @property
    def canonical(self) -> bool:
        g = len(self.paths)
        identity = np.eye(g, dtype=int)
        return (np.array_equal(self.AB, identity) and not self.AA.any() and not self.BB.any()
                and np.array_equal(self.enclosure, identity))

def cycle_certificates(curve: FiniteGenusCurve) -> CycleSystem:
    """Build the A-loops and B-paths of the curve and compute their intersection numbers."""
    g = curve.genus
    rhos = ellipse_radii(curve)
    paths = b_paths(curve, rhos)
    a_loops = [gap.ellipse(rho, CERTIFICATE_POINTS) for gap, rho in zip(curve.gaps, rhos)]
    b_lines = [path.samples(CERTIFICATE_POINTS)[::-1] for path in paths]

    AB = np.array([[signed_intersection(a, b) for b in b_lines] for a in a_loops], dtype=int).reshape(g, g)
    AA = np.array([[0 if k == l else signed_intersection(a_loops[k], a_loops[l]) for l in range(g)] for k in range(g)], dtype=int).reshape(g, g)
    BB = np.array([[0 if k == l else signed_intersection(b_lines[k][1:], b_lines[l][1:]) for l in range(g)] for k in range(g)], dtype=int).reshape(g, g)
    enclosure = np.array([[winding_number(a, gap.center) for gap in curve.gaps] for a in a_loops], dtype=int).reshape(g, g)
    system = CycleSystem(rhos, paths, a_loops, b_lines, AB, AA, BB, enclosure)
    if not system.canonical:
        logger.warning(f"Cycle certificates are not canonical: AB={AB.tolist()}, AA={AA.tolist()}, BB={BB.tolist()}")
    return system


################
# Period lattice
################

@dataclass(frozen=True)
class PeriodLattice:
    """
    Lattice Γ = ℤ^g + Ω ℤ^g generated by the A-periods (unit vectors) and the B-period columns.

    Attributes:
        - omega (NDArray[np.complex128]): B-period matrix Ω.
    """
    omega: NDArray[np.complex128]

    @property
    def genus(self) -> int:
        return self.omega.shape[0]

    def coordinates(self, z: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Real (a, b) with z = a + Ω b, from the real system [[I, Re Ω], [0, Im Ω]]."""
        z = np.asarray(z, dtype=complex)
        g = self.genus
        M = np.block([[np.eye(g), self.omega.real], [np.zeros((g, g)), self.omega.imag]])
        try:
            solution = np.linalg.solve(M, np.concatenate([z.real, z.imag]))
        except np.linalg.LinAlgError as err:
            logger.error("Im Ω is singular, the period lattice is degenerate")
            raise PeriodMatrixError("Degenerate period lattice (Im Ω singular)", {'genus': g}) from err
        return solution[:g], solution[g:]

    def reduce(self, z: ArrayLike) -> tuple[NDArray[np.complex128], NDArray[np.int_]]:
        """
        Representative of z modulo Γ with lattice coefficients in [-1/2, 1/2].

        Returns:
            tuple: (representative, integer coefficients (n_A, n_B) stacked).
        """
        a, b = self.coordinates(z)
        n_a, n_b = np.rint(a), np.rint(b)
        reduced = np.asarray(z, dtype=complex) - n_a - self.omega @ n_b
        return reduced, np.concatenate([n_a, n_b]).astype(int)

    def distance(self, z: ArrayLike) -> float:
        """|z - γ| for the lattice point γ obtained by rounding the coordinates."""
        if self.genus == 0:
            return 0.0
        reduced, _ = self.reduce(z)
        return float(np.abs(reduced).max())

    def symmetry_residual(self) -> float:
        """|Ω - Ωᵀ|/|Ω|; zero for canonical cycles."""
        if self.genus == 0:
            return 0.0
        return float(np.abs(self.omega - self.omega.T).max() / np.abs(self.omega).max())

def period_lattice(basis: DualFormBasis) -> PeriodLattice:
    return PeriodLattice(basis.b_period_matrix)
