"""Sign patterns, absolute vectors and induced matrix norms.

A sign pattern is a diagonal matrix with entries in {-1, +1}. It is stored
as a tuple of booleans (True means +1) and converted to a float vector of
diagonal entries on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError

__all__ = [
    "MAX_DIM",
    "SignPattern",
    "sign_matrix",
    "abs_vector",
    "induced_norm",
    "enumerate_sign_patterns",
    "NORM_KINDS",
]

MAX_DIM = 16
NORM_KINDS = ("one", "two", "infinity")


@dataclass(frozen=True)
class SignPattern:
    """Diagonal +-1 matrix encoded as ``m`` bits (True <=> +1)."""

    bits: tuple[bool, ...]

    def __post_init__(self):
        m = len(self.bits)
        if not 1 <= m <= MAX_DIM:
            raise DimensionError(f"sign pattern dimension {m} outside 1..{MAX_DIM}")
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    @property
    def m(self) -> int:
        return len(self.bits)

    @cached_property
    def diag(self) -> np.ndarray:
        d = np.where(np.array(self.bits), 1.0, -1.0)
        d.flags.writeable = False
        return d

    @property
    def index(self) -> int:
        """Position of this pattern in :func:`enumerate_sign_patterns` order."""
        return sum(1 << i for i, b in enumerate(self.bits) if not b)

    @classmethod
    def from_index(cls, index: int, m: int) -> "SignPattern":
        return cls(tuple(not (index >> i) & 1 for i in range(m)))

    @classmethod
    def from_diag(cls, diag) -> "SignPattern":
        diag = np.asarray(diag, dtype=float)
        if not np.all(np.abs(diag) == 1.0):
            raise ValueError("diagonal entries must be +1 or -1")
        return cls(tuple(diag > 0))

    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)

    def apply(self, x) -> np.ndarray:
        """Left-multiply a vector (or matrix rows) by the pattern."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.m:
            raise DimensionError(f"expected leading dimension {self.m}, got {x.shape[0]}")
        if x.ndim == 1:
            return self.diag * x
        return self.diag[:, None] * x

    def flipped(self, indices) -> "SignPattern":
        bits = list(self.bits)
        for i in indices:
            bits[i] = not bits[i]
        return SignPattern(tuple(bits))

    def __neg__(self) -> "SignPattern":
        return SignPattern(tuple(not b for b in self.bits))

    def __str__(self):
        return "diag(" + ", ".join("+1" if b else "-1" for b in self.bits) + ")"


def _as_finite_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


def sign_matrix(x) -> SignPattern:
    """Sign pattern of ``x``; zero entries map to +1."""
    x = _as_finite_vector(x)
    return SignPattern(tuple(x >= 0))


def abs_vector(x) -> np.ndarray:
    return np.abs(_as_finite_vector(x))


def induced_norm(A, kind: str = "two") -> float:
    """Induced matrix norm of ``A``.

    Parameters
    ----------
    A : array_like, shape (m, n)
    kind : {"one", "two", "infinity"}
        ``one`` is the maximum absolute column sum, ``infinity`` the maximum
        absolute row sum and ``two`` the largest singular value, taken as the
        square root of the top eigenvalue of ``A.T @ A``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if kind == "one":
        return float(np.abs(A).sum(axis=0).max())
    if kind == "infinity":
        return float(np.abs(A).sum(axis=1).max())
    if kind == "two":
        if A.shape[0] != A.shape[1]:
            raise DimensionError("two-norm is only supported for square matrices")
        top = np.linalg.eigvalsh(A.T @ A)[-1]
        return float(np.sqrt(max(top, 0.0)))
    raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")


def all_norms(A) -> dict[str, float]:
    return {kind: induced_norm(A, kind) for kind in NORM_KINDS}


def enumerate_sign_patterns(m: int) -> list[SignPattern]:
    """All ``2**m`` sign patterns in binary counting order.

    Bit ``i`` of the counter flips diagonal entry ``i`` to -1, so the
    sequence starts at the identity and ends at ``-I``.
    """
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= MAX_DIM:
        raise DimensionError(f"m must be an integer in 1..{MAX_DIM}, got {m!r}")
    return [SignPattern.from_index(k, int(m)) for k in range(1 << int(m))]


def pattern_diagonals(m: int) -> np.ndarray:
    """Diagonals of every pattern as a ``(2**m, m)`` array, enumeration order."""
    if not 1 <= m <= MAX_DIM:
        raise DimensionError(f"m must be in 1..{MAX_DIM}, got {m}")
    k = np.arange(1 << m)[:, None]
    bits = (k >> np.arange(m)[None, :]) & 1
    return np.where(bits == 1, -1.0, 1.0)
