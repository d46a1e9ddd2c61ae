from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass
from functools import cached_property
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from shg_spectral.errors import NodeCollisionError
from shg_spectral.monodromy import c0_derivative_at_node, lambda_k0, lambda_k0_array, vacuum_entries
from shg_spectral.utils.utility_classes import SpectralDivisor
from shg_spectral.utils.utils import as_complex_array


logger = logging.getLogger(__name__)


################
# Vacuum node quotients
################

def node_sqrt(labels: ArrayLike) -> NDArray[np.complex128]:
    """Square roots s_k of the vacuum nodes, s_0 = i."""
    labels = np.atleast_1d(np.asarray(labels, dtype=int))
    return np.sqrt(lambda_k0_array(labels).astype(complex))

def c0_over_node(lam: ArrayLike, labels: ArrayLike) -> NDArray[np.complex128]:
    """
    c0(λ)/(λ - λ_{k,0}) without cancellation, elementwise in (λ, k).

    With s = ±λ^{1/2} on the side of s_k and w = ζ(λ) - |k|π = (s - s_k)(1 - 1/(s s_k))/4,
    c0/(λ - λ_{k,0}) = (-1)^k s·sinc(w)·(1 - 1/(s s_k))/(4(s + s_k)).
    """
    lam = as_complex_array(lam)
    labels = np.broadcast_to(np.asarray(labels, dtype=int), lam.shape)
    s_k = node_sqrt(labels.ravel()).reshape(lam.shape)
    s = np.sqrt(lam)
    # c0 is even in λ^{1/2}
    s = np.where(np.abs(s - s_k) <= np.abs(s + s_k), s, -s)
    factor = 1 - 1 / (s * s_k)
    w = (s - s_k) * factor / 4
    sign = np.where(labels % 2 == 0, 1.0, -1.0)
    return sign * s * np.sinc(w / np.pi) * factor / (4 * (s + s_k))


################
# Telescoped node product
################

@dataclass(frozen=True)
class TelescopedProduct:
    """
    P(λ) = c0(λ)·∏_{|k|<=K} (λ - r_k)/(λ - λ_{k,0}), the vacuum c0 with the nodes |k| <= K moved to the roots r.

    Roots are expanded by multiplicity and paired with the nodes in label order. Beyond K the
    roots equal the vacuum nodes. The node nearest to λ is always divided out of c0 through
    c0_over_node, so P and the quotients P/(λ - r_i) are evaluated without cancellation.

    Attributes:
        - roots (NDArray[np.complex128]): Roots, one per node.
        - root_labels (NDArray[np.int_]): Label of the divisor entry each root comes from.
        - K (int): Truncation radius; the nodes are λ_{k,0}, |k| <= K.
    """
    roots: NDArray[np.complex128]
    root_labels: NDArray[np.int_]
    K: int

    def __post_init__(self) -> None:
        if len(self.roots) != 2 * self.K + 1:
            logger.error(f"Telescoped product needs {2 * self.K + 1} roots, got {len(self.roots)}")
            raise ValueError(f"Expected {2 * self.K + 1} roots (with multiplicity) for K={self.K}, got {len(self.roots)}")

    @classmethod
    def from_divisor(cls, D: SpectralDivisor) -> TelescopedProduct:
        roots = [e.lam for e in D for _ in range(e.mult)]
        labels = [e.k for e in D for _ in range(e.mult)]
        return cls(np.asarray(roots, dtype=complex), np.asarray(labels, dtype=int), D.K)

    @classmethod
    def from_roots(cls, labels: ArrayLike, roots: ArrayLike, K: int) -> TelescopedProduct:
        order = np.argsort(np.asarray(labels, dtype=int), kind='stable')
        return cls(as_complex_array(roots)[order], np.asarray(labels, dtype=int)[order], K)

    @cached_property
    def labels(self) -> NDArray[np.int_]:
        return np.arange(-self.K, self.K + 1)

    @cached_property
    def nodes(self) -> NDArray[np.complex128]:
        return lambda_k0_array(self.labels).astype(complex)

    @cached_property
    def tau_squared(self) -> complex:
        """∏ λ_{k,0}/r_k, the value 1/R(0) of the ratio R = P/c0."""
        return complex(np.prod(self.nodes / self.roots))

    def _terms(self, lam: NDArray[np.complex128]) -> tuple[NDArray[np.complex128], NDArray[np.complex128], NDArray[np.complex128]]:
        """(c0 divided by its nearest node, numerator factors, denominators with the nearest node set to 1)."""
        den = lam[:, None] - self.nodes[None, :]
        nearest = np.argmin(np.abs(den), axis=1)
        rows = np.arange(len(lam))
        den[rows, nearest] = 1
        base = c0_over_node(lam, self.labels[nearest])
        num = lam[:, None] - self.roots[None, :]
        return base, num, den

    def value(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """P(λ)."""
        base, num, den = self._terms(as_complex_array(lam))
        return base * np.prod(num / den, axis=1)

    def without_roots(self, lam: ArrayLike, drop: list[int] | tuple[int, ...]) -> NDArray[np.complex128]:
        """P(λ)/∏_{i in drop}(λ - r_i), by omitting those numerator factors."""
        base, num, den = self._terms(as_complex_array(lam))
        num[:, list(drop)] = 1
        return base * np.prod(num / den, axis=1)

    def quotients(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """Matrix Q[n, i] = P(λ_n)/(λ_n - r_i) for every root, from prefix and suffix products."""
        base, num, den = self._terms(as_complex_array(lam))
        q = num / den
        ones = np.ones((q.shape[0], 1), dtype=complex)
        prefix = np.cumprod(np.hstack([ones, q[:, :-1]]), axis=1)
        suffix = np.cumprod(np.hstack([ones, q[:, :0:-1]]), axis=1)[:, ::-1]
        return base[:, None] * prefix * suffix / den

    @cached_property
    def root_derivatives(self) -> NDArray[np.complex128]:
        """P'(r_i) = P(r_i)/(r_i - r_i) read as the omitted-factor product; valid for simple roots."""
        return np.array([self.without_roots(self.roots[i:i + 1], (i,))[0] for i in range(len(self.roots))])

    def cardinals(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """Cardinal functions ℓ_i(λ) = P(λ)/(P'(r_i)(λ - r_i)), one column per root; the roots must be simple."""
        return self.quotients(lam) / self.root_derivatives[None, :]

    def ratio(self, lam: ArrayLike) -> NDArray[np.complex128]:
        """R(λ) = ∏ (λ - r_k)/(λ - λ_{k,0}); poles at the nodes."""
        lam = as_complex_array(lam)
        return np.prod((lam[:, None] - self.roots[None, :]) / (lam[:, None] - self.nodes[None, :]), axis=1)

    def require_simple(self, separation: float = 1e-12) -> None:
        """
        Raises:
            NodeCollisionError: If two roots coincide.
        """
        gaps = np.abs(self.roots[:, None] - self.roots[None, :]) + np.eye(len(self.roots)) * np.inf
        i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
        if gaps[i, j] < separation * (1 + abs(self.roots[i])):
            logger.error(f"Interpolation nodes k={self.root_labels[i]} and k={self.root_labels[j]} coincide at λ={self.roots[i]}")
            raise NodeCollisionError("Coincident interpolation nodes", {'labels': [int(self.root_labels[i]), int(self.root_labels[j])]})

    def node_spacing(self, index: int) -> float:
        """Distance from root index to the nearest root of another entry or vacuum node outside the truncation."""
        others = self.roots[self.root_labels != self.root_labels[index]]
        outside = np.array([lambda_k0(k) for k in (self.K + 1, -self.K - 1)])
        return float(min(np.abs(others - self.roots[index]).min(initial=np.inf), np.abs(outside - self.roots[index]).min()))


def tail_node_data(product: TelescopedProduct, terms: int) -> tuple[NDArray[np.int_], NDArray[np.float64], NDArray[np.complex128]]:
    """Labels K < |k| <= K + terms, their vacuum nodes and the ratios R(λ_{k,0})."""
    K = product.K
    labels = np.concatenate([np.arange(K + 1, K + terms + 1), -np.arange(K + 1, K + terms + 1)])
    nodes = lambda_k0_array(labels)
    return labels, nodes, product.ratio(nodes)

def vacuum_cardinals(lam: ArrayLike, labels: ArrayLike) -> NDArray[np.complex128]:
    """ℓ⁰_k(λ) = c0(λ)/(c0'(λ_{k,0})(λ - λ_{k,0})), one column per label."""
    lam = as_complex_array(lam)
    labels = np.asarray(labels, dtype=int)
    derivatives = np.array([c0_derivative_at_node(k) for k in labels])
    grid_lam, grid_k = np.meshgrid(lam, labels, indexing='ij')
    return c0_over_node(grid_lam, grid_k) / derivatives[None, :]

def c0(lam: ArrayLike) -> NDArray[np.complex128]:
    """c0(λ) = λ^{1/2} sin ζ(λ)."""
    return vacuum_entries(lam)[2]
