from __future__ import annotations # Enable type annotation to be stored as string
import logging

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linear_sum_assignment

from shg_spectral.run_config import RunConfig, get_run_config
from shg_spectral.utils.utility_classes import DivisorEntry, SpectralDivisor


logger = logging.getLogger(__name__)

# Cost of pairs outside the label window
_FORBIDDEN = 1e30


def l2_weight(k: int, n: int, m: int) -> float:
    """Weight of index k in ℓ²_{n,m}: k^n for k > 0, |k|^m for k < 0, 1 at k = 0."""
    if k > 0:
        return float(k) ** n
    if k < 0:
        return float(-k) ** m
    return 1.0

def _padded_entries(D: SpectralDivisor, window: int) -> list[DivisorEntry]:
    """Enumerated entries plus the vacuum tail entries within the window beyond K."""
    tail = [D.entry(k) for j in range(1, window + 1) for k in (D.K + j, -D.K - j)]
    return list(D.entries) + tail

def _matched_distance(rows: list[DivisorEntry], cols: list[DivisorEntry], window: int) -> float:
    cost = np.full((len(rows), len(cols)), _FORBIDDEN)
    weights = np.array([l2_weight(e.k, -1, 3) for e in rows])
    row_labels = np.array([e.k for e in rows])
    col_labels = np.array([e.k for e in cols])
    lam_r, lam_c = np.array([e.lam for e in rows]), np.array([e.lam for e in cols])
    mu_r, mu_c = np.array([e.mu for e in rows]), np.array([e.mu for e in cols])

    allowed = np.abs(row_labels[:, None] - col_labels[None, :]) <= window
    full = (weights[:, None] ** 2) * np.abs(lam_r[:, None] - lam_c[None, :]) ** 2 + np.abs(mu_r[:, None] - mu_c[None, :]) ** 2
    cost[allowed] = full[allowed]
    row_ind, col_ind = linear_sum_assignment(cost)

    dl: NDArray[np.float64] = weights[row_ind] * np.abs(lam_r[row_ind] - lam_c[col_ind])
    dm: NDArray[np.float64] = np.abs(mu_r[row_ind] - mu_c[col_ind])
    return float(np.sqrt(np.sum(dl**2)) + np.sqrt(np.sum(dm**2)))

def divisor_distance(D1: SpectralDivisor, D2: SpectralDivisor, window: int | None = None, config: RunConfig | None = None) -> float:
    """
    Distance of two divisors in ℓ²_{-1,3} (λ) plus ℓ²_{0,0} (μ), minimized over relabellings.

    The infimum over finite permutations is replaced by a min-cost matching of labels at most
    window apart, so the value is an upper bound of the infimum. Both matching directions are
    evaluated and the smaller one is returned, which makes the distance symmetric.

    Args:
        D1, D2 (SpectralDivisor): Divisors with equal K.
        window (int | None): Largest label shift of a matched pair, default config.match_window.

    Returns:
        float: The distance.
    """
    config = config or get_run_config()
    if D1.K != D2.K:
        logger.error(f"Divisors with different truncation radii: {D1.K} vs {D2.K}")
        raise ValueError(f"divisor_distance needs equal K, got {D1.K} and {D2.K}")
    window = config.match_window if window is None else window
    rows = _padded_entries(D1, window)
    cols = _padded_entries(D2, window)
    return min(_matched_distance(rows, cols, window), _matched_distance(cols, rows, window))
