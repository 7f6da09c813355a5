"""Solver for the piecewise-linear control equation ``u + H|u| = u_c``.

Writing ``u = S p`` with ``S`` a sign pattern and ``p = |u| >= 0`` turns the
equation into the family of linear systems ``(S + H) p = u_c``. Each pattern
``S_i`` spans a closed convex cone ``C_i = {(S_i + H) p : p >= 0}``; when some
induced norm of ``H`` is below one these cones tile the whole space with
disjoint interiors, so exactly one control solves the equation. The solver
walks the patterns and returns the first one whose linear solve is
nonnegative.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionError,
    EigenvalueTooSmall,
    NoNonnegativeEigenvector,
    NoSolution,
    SingularSystem,
)
from .sign_algebra import (
    MAX_DIM,
    NORM_KINDS,
    SignPattern,
    induced_norm,
    pattern_diagonals,
    sign_matrix,
)

__all__ = [
    "ZERO_TOL",
    "COND_LIMIT",
    "SolveInstance",
    "SolveResult",
    "ConeClassification",
    "Candidate",
    "NonuniqueInstance",
    "zero_tolerance",
    "equation_residual",
    "solve_control_equation",
    "exhaustive_solutions",
    "distinct_controls",
    "classify_cone_membership",
    "construct_nonunique_instance",
]

ZERO_TOL = 1e-10
# S + H counts as singular beyond this 2-norm condition number
COND_LIMIT = 1e12


def zero_tolerance(y) -> float:
    y = np.abs(y)
    return ZERO_TOL * (1.0 + (float(y.max()) if y.size else 0.0))


@dataclass(frozen=True)
class SolveInstance:
    """Right-hand side ``u_c`` and coupling matrix ``H = S(v) @ F_bar``."""

    H: np.ndarray
    u_c: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=float, ndmin=2)
        u_c = np.array(self.u_c, dtype=float, ndmin=1)
        m = u_c.shape[0]
        if u_c.ndim != 1 or H.shape != (m, m):
            raise DimensionError(f"H must be {m}x{m} for u_c of length {m}, got {H.shape}")
        if not 1 <= m <= MAX_DIM:
            raise DimensionError(f"dimension {m} outside 1..{MAX_DIM}")
        if not (np.isfinite(H).all() and np.isfinite(u_c).all()):
            raise ValueError("instance has non-finite entries")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "u_c", u_c)

    @classmethod
    def from_bounds(cls, v_signs: SignPattern, F_bar, u_c) -> "SolveInstance":
        return cls(v_signs.apply(np.asarray(F_bar, dtype=float)), u_c)

    @property
    def m(self) -> int:
        return self.u_c.shape[0]

    def norms(self) -> dict[str, float]:
        return {kind: induced_norm(self.H, kind) for kind in NORM_KINDS}

    def admissible(self) -> bool:
        return min(self.norms().values()) < 1.0


@dataclass(frozen=True)
class SolveResult:
    u_hat: np.ndarray
    pattern: SignPattern
    magnitudes: np.ndarray
    patterns_tried: int
    on_surface: bool

    def residual(self, inst: SolveInstance) -> float:
        D = np.diag(self.pattern.diag) + inst.H
        return float(np.max(np.abs(D @ self.magnitudes - inst.u_c)))


@dataclass(frozen=True)
class ConeClassification:
    status: str  # "interior" | "surface" | "outside"
    witness: np.ndarray


class Candidate(NamedTuple):
    pattern: SignPattern
    magnitudes: np.ndarray
    u_hat: np.ndarray


@dataclass(frozen=True)
class NonuniqueInstance:
    v_signs: SignPattern
    u_c: np.ndarray
    solutions: tuple[np.ndarray, np.ndarray]
    eigenvalue: float
    eigenvector: np.ndarray = field(repr=False)


def equation_residual(u_hat, H, u_c) -> float:
    """Infinity-norm residual of ``u + H|u| - u_c``."""
    u_hat = np.asarray(u_hat, dtype=float)
    return float(np.max(np.abs(u_hat + np.asarray(H) @ np.abs(u_hat) - np.asarray(u_c))))


def _accepted(p: np.ndarray, eps: float) -> bool:
    return bool(p.min() >= -eps)


@functools.lru_cache(maxsize=4096)
def _pattern(index: int, m: int) -> SignPattern:
    return SignPattern.from_index(index, m)


def _solve_pattern(diag: np.ndarray, H: np.ndarray, u_c: np.ndarray) -> np.ndarray:
    if H.shape[0] == 2:
        # closed form; LAPACK call overhead dominates at this size
        a = H[0, 0] + diag[0]
        b = H[0, 1]
        c = H[1, 0]
        d = H[1, 1] + diag[1]
        det = a * d - b * c
        if not abs(det) > 1e-15 * (abs(a * d) + abs(b * c)):
            raise SingularSystem(f"S + H is singular for S = {diag}")
        y0, y1 = u_c
        return np.array([(d * y0 - b * y1) / det, (a * y1 - c * y0) / det])
    D = H.copy()
    D.flat[::D.shape[0] + 1] += diag
    try:
        p = np.linalg.solve(D, u_c)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"S + H is singular for S = {diag}") from exc
    if not math.isfinite(p.sum()):
        raise SingularSystem(f"S + H is singular for S = {diag}")
    return p


def solve_control_equation(inst: SolveInstance, *, warm_start: bool = True,
                           check: bool = True) -> SolveResult:
    """Unique ``u_hat`` with ``u_hat + H |u_hat| = u_c``.

    Patterns are tried starting from ``sign_matrix(u_c)`` (when
    ``warm_start``) and then in enumeration order. A pattern is accepted
    when every magnitude is at least ``-eps`` with
    ``eps = 1e-10 * (1 + max|u_c|)``; near-zero magnitudes therefore accept
    either sign bit.

    ``check=False`` skips the admissibility test on ``H``, for callers that
    have certified the upper bound matrix already.

    Raises
    ------
    NoSolution
        If no pattern is accepted.
    SingularSystem
        If ``S + H`` is singular for a visited pattern.
    """
    if check and not inst.admissible():
        raise NoSolution(
            f"H is not admissible (norms {inst.norms()}); a unique solution is not guaranteed")
    m = inst.m
    u_c = inst.u_c
    H = inst.H
    eps = zero_tolerance(u_c)
    n = 1 << m

    if warm_start:
        # index of sign_matrix(u_c): bit i set where u_c[i] < 0
        first = sum(1 << i for i, neg in enumerate((u_c < 0).tolist()) if neg)
        order = itertools.chain((first,), (k for k in range(n) if k != first))
    else:
        order = range(n)

    tried = 0
    for k in order:
        pattern = _pattern(k, m)
        tried += 1
        p = _solve_pattern(pattern.diag, H, u_c)
        if _accepted(p, eps):
            return SolveResult(
                u_hat=pattern.diag * p,
                pattern=pattern,
                magnitudes=p,
                patterns_tried=tried,
                on_surface=bool((np.abs(p) <= eps).any()),
            )
    raise NoSolution(f"no sign pattern accepted after {tried} trials")


def exhaustive_solutions(inst: SolveInstance, singular: list | None = None) -> list[Candidate]:
    """Every pattern whose linear solve passes the acceptance test.

    No admissibility precondition is imposed, so non-unique solution sets
    can be observed. Patterns whose system is singular (condition number
    above :data:`COND_LIMIT`) are skipped and appended to ``singular`` when a
    list is supplied.
    """
    m = inst.m
    diags = pattern_diagonals(m)
    D = np.broadcast_to(inst.H, (diags.shape[0], m, m)).copy()
    idx = np.arange(m)
    D[:, idx, idx] += diags
    cond = np.linalg.cond(D)
    ok = np.isfinite(cond) & (cond < COND_LIMIT)
    eps = zero_tolerance(inst.u_c)
    out = []
    if np.any(ok):
        P = np.linalg.solve(D[ok], np.broadcast_to(inst.u_c, (int(ok.sum()), m))[..., None])[..., 0]
        for k, p in zip(np.flatnonzero(ok), P):
            if _accepted(p, eps):
                pattern = SignPattern.from_index(int(k), m)
                out.append(Candidate(pattern, p, diags[k] * p))
    if singular is not None:
        singular.extend(SignPattern.from_index(int(k), m) for k in np.flatnonzero(~ok))
    return out


def distinct_controls(candidates, tol: float = 1e-9) -> list[np.ndarray]:
    """Collapse candidate controls closer than ``tol`` (infinity norm)."""
    reps: list[np.ndarray] = []
    for c in candidates:
        u = c.u_hat if isinstance(c, Candidate) else np.asarray(c)
        if not any(np.max(np.abs(u - r)) <= tol for r in reps):
            reps.append(u)
    return reps


def classify_cone_membership(pattern: SignPattern, H, y) -> ConeClassification:
    """Locate ``y`` relative to the cone ``{(S + H) p : p >= 0}``."""
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    D = np.diag(pattern.diag) + H
    if not np.linalg.cond(D) < COND_LIMIT:
        raise SingularSystem(f"S + H is singular for S = {pattern}")
    w = np.linalg.solve(D, y)
    eps = zero_tolerance(y)
    if np.all(w > eps):
        status = "interior"
    elif np.all(w >= -eps):
        status = "surface"
    else:
        status = "outside"
    return ConeClassification(status, w)


def construct_nonunique_instance(F_bar, eigen_index: int | None = None,
                                 unit_tol: float = 1e-9) -> NonuniqueInstance:
    """Build a right-hand side with two controls for a symmetric ``F_bar``.

    ``p`` is a nonnegative eigenvector of ``F_bar`` for eigenvalue ``lam``
    and ``S(v)`` the sign pattern of the eigenvector as returned by the
    eigensolver, so that ``S(v) F_bar p = lam S(v) p``. Then

    * ``|lam| == 1``: ``u_c = 0`` is solved by ``0`` and by ``-lam S(v) p``;
    * ``|lam| > 1``: ``u_c = lam S(v) p`` is solved by
      ``sigma sign(lam) S(v) p(sigma)`` for ``sigma = +1, -1`` with
      ``p(sigma) = lam / (sigma sign(lam) + lam) p``.

    ``eigen_index`` selects from the ascending eigenvalues; the default is
    the eigenvalue of largest modulus.
    """
    F_bar = np.asarray(F_bar, dtype=float)
    if F_bar.ndim != 2 or F_bar.shape[0] != F_bar.shape[1]:
        raise DimensionError("F_bar must be square")
    if not np.allclose(F_bar, F_bar.T, rtol=0, atol=1e-12 * max(1.0, np.abs(F_bar).max())):
        raise ValueError("F_bar must be symmetric")
    lams, vecs = np.linalg.eigh(F_bar)
    if eigen_index is None:
        eigen_index = int(np.argmax(np.abs(lams)))
    lam = float(lams[eigen_index])
    y = vecs[:, eigen_index]
    if abs(lam) < 1.0 - unit_tol:
        raise EigenvalueTooSmall(f"|lambda| = {abs(lam):.6g} < 1")

    tiny = 1e-12
    if not (np.all(y >= -tiny) or np.all(y <= tiny)):
        raise NoNonnegativeEigenvector(
            f"eigenvector for lambda = {lam:.6g} has mixed signs; construction needs p >= 0")
    v_signs = sign_matrix(y)
    p = np.abs(y)
    Sv_p = v_signs.diag * p
    H = v_signs.apply(F_bar)

    if abs(abs(lam) - 1.0) <= unit_tol:
        u_c = np.zeros_like(p)
        sols = (np.zeros_like(p), -np.sign(lam) * Sv_p)
    else:
        u_c = lam * Sv_p
        sgn = np.sign(lam)
        sols = tuple(
            sigma * sgn * (lam / (sigma * sgn + lam)) * Sv_p for sigma in (1.0, -1.0))

    for u in sols:
        r = equation_residual(u, H, u_c)
        if not r < 1e-9:
            raise ArithmeticError(f"constructed solution has residual {r:.3g}")
    return NonuniqueInstance(v_signs, u_c, sols, lam, p)
