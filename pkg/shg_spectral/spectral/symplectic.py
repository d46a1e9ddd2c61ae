from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass
from typing import Mapping
import logging

import numpy as np

from shg_spectral.errors import NotTameError
from shg_spectral.potential import PeriodicPotential, PotentialVariation
from shg_spectral.run_config import RunConfig, get_run_config
from shg_spectral.spectral.divisor import divisor_variation, find_divisor, is_tame
from shg_spectral.utils.utility_classes import SpectralDivisor


logger = logging.getLogger(__name__)

DivisorTangent = Mapping[int, tuple[complex, complex]]


@dataclass(frozen=True)
class SymplecticReport:
    """Comparison of Ω on potentials with Ω̃ on divisors for one pair of variations."""
    omega: complex
    omega_tilde: complex
    relative_error: float
    K: int
    h: float


def symplectic_omega(p: PeriodicPotential, v1: PotentialVariation, v2: PotentialVariation) -> complex:
    """Ω(v1, v2) = ∫_0^1 (δu·δ̃u_y - δ̃u·δu_y) dx by the bilinear Parseval sum Σ_j f̂_j ĝ_{-j}."""
    J = max(p.J, v1.J, v2.J)
    u1, uy1 = v1.padded(J)
    u2, uy2 = v2.padded(J)
    return complex(np.sum(u1 * uy2[::-1]) - np.sum(u2 * uy1[::-1]))

def symplectic_omega_tilde(D: SpectralDivisor, dD1: DivisorTangent, dD2: DivisorTangent) -> complex:
    """Ω̃ = (i/2) Σ_k (δλ_k/λ_k · δ̃μ_k/μ_k - δ̃λ_k/λ_k · δμ_k/μ_k) over the labels of both tangents."""
    total = 0j
    for k in sorted(set(dD1) & set(dD2)):
        e = D.entry(k)
        dl1, dm1 = dD1[k]
        dl2, dm2 = dD2[k]
        total += (dl1 / e.lam) * (dm2 / e.mu) - (dl2 / e.lam) * (dm1 / e.mu)
    return 0.5j * total

def symplectic_identity_check(p: PeriodicPotential, v1: PotentialVariation, v2: PotentialVariation, h: float, K: int | None = None, config: RunConfig | None = None) -> SymplecticReport:
    """
    Compare Ω(v1, v2) with Ω̃ of the divisor variations along v1 and v2.

    Raises:
        NotTameError: If the divisor of p is not tame.
        TrackingLossError: If a divisor entry leaves its annulus under the variation.
    """
    config = config or get_run_config()
    K = config.K if K is None else K
    D = find_divisor(p, K, config)
    if not is_tame(D, config):
        logger.error("Symplectic check needs a tame divisor.")
        raise NotTameError("Symplectic check needs a tame divisor.", {'K': K})

    dD1 = divisor_variation(p, v1, h, D, config=config)
    dD2 = divisor_variation(p, v2, h, D, config=config)
    omega = symplectic_omega(p, v1, v2)
    omega_tilde = symplectic_omega_tilde(D, dD1, dD2)
    rel = abs(omega - omega_tilde) / max(abs(omega), 1e-300)
    logger.info(f"Ω = {omega:.6g}, Ω̃ = {omega_tilde:.6g}, relative difference {rel:.3g} (K={K}, h={h})")
    return SymplecticReport(omega, omega_tilde, float(rel), K, h)
