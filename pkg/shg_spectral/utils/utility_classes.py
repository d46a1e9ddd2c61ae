from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass, field, replace
from typing import Any, Iterator, Literal, overload

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class Matrix2C:
    """Class to store a 2x2 complex matrix (row-major). Support dict-like access.

    Attributes:
        a: complex: Entry (1,1).
        b: complex: Entry (1,2).
        c: complex: Entry (2,1).
        d: complex: Entry (2,2)."""
    a: complex
    b: complex
    c: complex
    d: complex

    @overload
    def __getitem__(self, key: Literal['a', 'b', 'c', 'd']) -> complex:
        pass

    @overload
    def __getitem__(self, key: str) -> complex:
        pass

    def __getitem__(self, key: str) -> complex:
        return getattr(self, key)

    @classmethod
    def from_array(cls, arr: NDArray[np.complexfloating]) -> Matrix2C:
        """Build the matrix from a (2, 2) array."""
        return cls(complex(arr[0, 0]), complex(arr[0, 1]), complex(arr[1, 0]), complex(arr[1, 1]))

    @classmethod
    def identity(cls) -> Matrix2C:
        return cls(1+0j, 0j, 0j, 1+0j)

    def as_array(self) -> NDArray[np.complex128]:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def inverse(self) -> Matrix2C:
        """Inverse through the adjugate; exact for unimodular matrices up to the 1/det factor."""
        det = self.det
        return Matrix2C(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def __matmul__(self, other: Matrix2C) -> Matrix2C:
        return Matrix2C.from_array(self.as_array() @ other.as_array())


@dataclass(frozen=True)
class FrameSample:
    """Value of the extended frame at one point of the period interval.

    Attributes:
        x: float: Position in [0, 1].
        F: Matrix2C: Frame value, the identity at x = 0."""
    x: float
    F: Matrix2C


@dataclass(frozen=True)
class DivisorEntry:
    """One point of a spectral divisor. Support dict-like access.

    Attributes:
        k: int: Annulus label of the point.
        lam: complex: Spectral parameter λ_k, nonzero.
        mu: complex: Eigenvalue μ_k, nonzero.
        mult: int: Multiplicity of the point."""
    k: int
    lam: complex
    mu: complex
    mult: int = 1

    def __getitem__(self, key: str) -> Any:
        return getattr(self, key)

    def __post_init__(self) -> None:
        if self.mu == 0:
            raise ValueError(f"Divisor entry k={self.k} has mu = 0.")
        if self.lam == 0:
            raise ValueError(f"Divisor entry k={self.k} has lambda = 0.")
        if self.mult < 1:
            raise ValueError(f"Divisor entry k={self.k} has multiplicity {self.mult} < 1.")


@dataclass(frozen=True)
class SpectralDivisor:
    """
    Truncated spectral divisor. Entries with |k| > K are implicitly the vacuum points (λ_{k,0}, (-1)^k).

    Attributes:
        - entries (tuple[DivisorEntry, ...]): Points sorted by label.
        - K (int): Truncation radius.
    """
    entries: tuple[DivisorEntry, ...]
    K: int
    _by_label: dict[int, DivisorEntry] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        entries = tuple(sorted(self.entries, key=lambda e: e.k))
        object.__setattr__(self, 'entries', entries)
        object.__setattr__(self, '_by_label', {e.k: e for e in entries})

    def __iter__(self) -> Iterator[DivisorEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_arrays(cls, labels: list[int] | NDArray, lambdas: list[complex] | NDArray, mus: list[complex] | NDArray, K: int, mults: list[int] | None = None) -> SpectralDivisor:
        mults = mults if mults is not None else [1] * len(labels)
        entries = tuple(DivisorEntry(int(k), complex(lam), complex(mu), int(m)) for k, lam, mu, m in zip(labels, lambdas, mus, mults))
        return cls(entries, K)

    @property
    def labels(self) -> NDArray[np.int_]:
        return np.array([e.k for e in self.entries], dtype=int)

    @property
    def lambdas(self) -> NDArray[np.complex128]:
        return np.array([e.lam for e in self.entries], dtype=complex)

    @property
    def mus(self) -> NDArray[np.complex128]:
        return np.array([e.mu for e in self.entries], dtype=complex)

    @property
    def mults(self) -> NDArray[np.int_]:
        return np.array([e.mult for e in self.entries], dtype=int)

    def entry(self, k: int) -> DivisorEntry:
        """Return the entry with label k, falling back on the vacuum point beyond K."""
        if k in self._by_label:
            return self._by_label[k]
        if abs(k) > self.K:
            # Import here to avoid circular imports
            from shg_spectral.monodromy import lambda_k0, mu_k0
            return DivisorEntry(k, complex(lambda_k0(k)), complex(mu_k0(k)))
        raise KeyError(f"Label {k} is not enumerated (absorbed by a multiple point) in divisor with K={self.K}.")

    def has_label(self, k: int) -> bool:
        return k in self._by_label

    def replace_entries(self, new_entries: list[DivisorEntry]) -> SpectralDivisor:
        """Return a copy where the entries with matching labels are replaced."""
        merged = dict(self._by_label)
        for e in new_entries:
            merged[e.k] = e
        return replace(self, entries=tuple(merged.values()))

    def restrict(self, labels: list[int]) -> SpectralDivisor:
        return SpectralDivisor(tuple(self._by_label[k] for k in labels if k in self._by_label), self.K)


@dataclass(frozen=True)
class BranchPair:
    """Pair of zeros of Δ²-4 in one annulus.

    Attributes:
        k: int: Annulus label.
        kappa1: complex: First branch point.
        kappa2: complex: Second branch point.
        double: bool: True when the pair is a double point."""
    k: int
    kappa1: complex
    kappa2: complex
    double: bool = False

    def __getitem__(self, key: str) -> Any:
        return getattr(self, key)

    @property
    def midpoint(self) -> complex:
        return (self.kappa1 + self.kappa2) / 2

    @property
    def width(self) -> float:
        return abs(self.kappa1 - self.kappa2)


@dataclass(frozen=True)
class BranchPointSet:
    """
    Branch points of the spectral curve grouped per annulus.

    Attributes:
        - pairs (tuple[BranchPair, ...]): Pairs sorted by label.
        - K (int): Truncation radius.
    """
    pairs: tuple[BranchPair, ...]
    K: int

    def __post_init__(self) -> None:
        object.__setattr__(self, 'pairs', tuple(sorted(self.pairs, key=lambda p: p.k)))

    def __iter__(self) -> Iterator[BranchPair]:
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def pair(self, k: int) -> BranchPair:
        for p in self.pairs:
            if p.k == k:
                return p
        raise KeyError(f"No branch pair with label {k} (K={self.K}).")

    @property
    def labels(self) -> NDArray[np.int_]:
        return np.array([p.k for p in self.pairs], dtype=int)

    @property
    def midpoints(self) -> NDArray[np.complex128]:
        return np.array([p.midpoint for p in self.pairs], dtype=complex)

    @property
    def widths(self) -> NDArray[np.float64]:
        return np.array([p.width for p in self.pairs], dtype=float)
