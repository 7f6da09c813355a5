"""Sliding-mode control law with an uncertain, possibly indefinite gain.

The sliding variables obey ``s' = f0 + df + M (I + F) Q u + eta`` with
``|F| <= F_bar`` element-wise. The control ``u_hat = Q u`` solves

    u_hat + S(v) F_bar |u_hat| = u_c,
    u_c = -M^-1 (f0 + S(s) (f_bar + eta_bar) + rho s),   v = M^T s,

which makes ``V = s's / 2`` decrease at least as fast as ``-rho s's``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .cone_solver import SolveInstance, SolveResult, solve_control_equation
from .errors import AdmissibilityViolation, DimensionError, NegativeEntries, SingularDecomposition
from .sign_algebra import NORM_KINDS, induced_norm

__all__ = [
    "GainDecomposition",
    "ControllerConfig",
    "ControlOutput",
    "AdmissibilityReport",
    "smooth_sign",
    "smoothed_signs",
    "reaching_term",
    "compute_control",
    "check_admissibility",
]

_COND_MAX = 1e12


def _square(name, A) -> np.ndarray:
    A = np.array(A, dtype=float, ndmin=2)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    by_norm: dict
    max_entry_condition: bool
    symmetric: bool

    def to_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "by_norm": dict(self.by_norm),
            "max_entry_below_1_over_m": self.max_entry_condition,
            "symmetric": self.symmetric,
        }


def check_admissibility(F_bar) -> AdmissibilityReport:
    """Solvability report for an upper bound matrix.

    ``admissible`` is true when any of the one, two or infinity induced
    norms is below one. ``max_entry_condition`` is the stricter entrywise
    test ``max F_bar < 1/m``, which implies admissibility but not
    conversely (``0.9 * I`` passes ours and fails it for ``m > 1``).
    """
    F_bar = _square("F_bar", F_bar)
    if np.any(F_bar < 0):
        raise NegativeEntries("upper bound matrix must be element-wise nonnegative")
    m = F_bar.shape[0]
    by_norm = {kind: induced_norm(F_bar, kind) for kind in NORM_KINDS}
    return AdmissibilityReport(
        admissible=min(by_norm.values()) < 1.0,
        by_norm=by_norm,
        max_entry_condition=bool(F_bar.max() < 1.0 / m),
        symmetric=bool(np.allclose(F_bar, F_bar.T, rtol=0.0, atol=1e-14)),
    )


@dataclass(frozen=True)
class GainDecomposition:
    """Factorisation ``G0 = M @ Q`` with upper bound matrix ``F_bar``."""

    M: np.ndarray
    Q: np.ndarray
    F_bar: np.ndarray

    def __post_init__(self):
        M = _square("M", self.M)
        Q = _square("Q", self.Q)
        F_bar = _square("F_bar", self.F_bar)
        if not (M.shape == Q.shape == F_bar.shape):
            raise DimensionError("M, Q and F_bar must share one shape")
        if np.any(F_bar < 0):
            raise NegativeEntries("F_bar must be element-wise nonnegative")
        for name, A in (("M", M), ("Q", Q)):
            if not np.linalg.cond(A) < _COND_MAX:
                raise SingularDecomposition(f"{name} is singular to working precision")
        for name, A in (("M", M), ("Q", Q), ("F_bar", F_bar)):
            A.flags.writeable = False
            object.__setattr__(self, name, A)

    @property
    def m(self) -> int:
        return self.M.shape[0]

    @cached_property
    def M_inv(self) -> np.ndarray:
        return np.linalg.inv(self.M)

    @cached_property
    def Q_inv(self) -> np.ndarray:
        return np.linalg.inv(self.Q)

    @cached_property
    def Q_cond(self) -> float:
        return float(np.linalg.cond(self.Q))

    @property
    def G0(self) -> np.ndarray:
        return self.M @ self.Q

    @cached_property
    def norms(self) -> dict[str, float]:
        return {kind: induced_norm(self.F_bar, kind) for kind in NORM_KINDS}

    @property
    def admissible(self) -> bool:
        return min(self.norms.values()) < 1.0

    def scaled(self, c: float) -> "GainDecomposition":
        """``(c M, Q / c)``: same ``G0`` and same ``F_bar``."""
        return GainDecomposition(self.M * c, self.Q / c, self.F_bar)

    def to_dict(self) -> dict:
        return {
            "M": self.M.tolist(),
            "Q": self.Q.tolist(),
            "F_bar": self.F_bar.tolist(),
            "norms": dict(self.norms),
        }


@dataclass(frozen=True)
class ControllerConfig:
    rho: float
    f_bar: np.ndarray
    decomposition: GainDecomposition
    eta_bar: np.ndarray | None = None
    delta_s: float = 1e-3
    delta_v: float = 1e-3
    smoothing: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise ValueError(f"rho must be positive, got {self.rho}")
        m = self.decomposition.m
        f_bar = np.array(self.f_bar, dtype=float, ndmin=1)
        eta = np.zeros(m) if self.eta_bar is None else np.array(self.eta_bar, dtype=float, ndmin=1)
        for name, vec in (("f_bar", f_bar), ("eta_bar", eta)):
            if vec.shape != (m,):
                raise DimensionError(f"{name} must have length {m}")
            if np.any(vec < 0) or not np.all(np.isfinite(vec)):
                raise ValueError(f"{name} must be finite and nonnegative")
        if self.delta_s < 0 or self.delta_v < 0:
            raise ValueError("smoothing widths must be nonnegative")
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "f_bar", f_bar)
        object.__setattr__(self, "eta_bar", eta)

    @property
    def m(self) -> int:
        return self.decomposition.m


@dataclass(frozen=True)
class ControlOutput:
    u: np.ndarray
    u_hat: np.ndarray
    u_c: np.ndarray
    solver: SolveResult = field(repr=False)


def smooth_sign(value: float, delta: float) -> float:
    """Saturated ramp: ``sign(value)`` outside ``[-delta, delta]``, ``value/delta`` inside."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if abs(value) >= delta:
        return 1.0 if value >= 0 else -1.0
    return value / delta


def smoothed_signs(x, delta: float) -> np.ndarray:
    """Vectorised :func:`smooth_sign`; ``delta == 0`` is the exact sign."""
    x = np.asarray(x, dtype=float)
    exact = np.where(x >= 0, 1.0, -1.0)
    if delta <= 0:
        return exact
    return np.where(np.abs(x) >= delta, exact, x / delta)


def _switch(x, delta, smoothing: bool) -> np.ndarray:
    return smoothed_signs(x, delta if smoothing else 0.0)


def reaching_term(f0, s, cfg: ControllerConfig) -> np.ndarray:
    f0 = np.asarray(f0, dtype=float)
    s = np.asarray(s, dtype=float)
    if f0.shape != (cfg.m,) or s.shape != (cfg.m,):
        raise DimensionError(f"f0 and s must have length {cfg.m}")
    sw = _switch(s, cfg.delta_s, cfg.smoothing)
    return -cfg.decomposition.M_inv @ (f0 + sw * (cfg.f_bar + cfg.eta_bar) + cfg.rho * s)


def compute_control(f0, s, cfg: ControllerConfig) -> ControlOutput:
    """Physical control ``u = Q^-1 u_hat`` for sliding state ``s``.

    With smoothing on, both ``S(s)`` in the reaching term and ``S(v)`` in
    the coupling matrix are replaced by saturated ramps; the ramp values lie
    in ``[-1, 1]`` so every induced norm of ``H`` stays at or below that of
    ``F_bar``.
    """
    dec = cfg.decomposition
    if not dec.admissible:
        raise AdmissibilityViolation(f"F_bar norms {dec.norms} are all >= 1")
    u_c = reaching_term(f0, s, cfg)
    v = dec.M.T @ np.asarray(s, dtype=float)
    H = _switch(v, cfg.delta_v, cfg.smoothing)[:, None] * dec.F_bar
    res = solve_control_equation(SolveInstance(H, u_c), check=False)
    u = dec.Q_inv @ res.u_hat
    scale = max(1.0, float(np.abs(res.u_hat).max()))
    if np.abs(dec.Q @ u - res.u_hat).max() > 1e-12 * scale * dec.Q_cond:
        raise ArithmeticError("Q u does not reproduce u_hat")
    return ControlOutput(u=u, u_hat=res.u_hat, u_c=u_c, solver=res)
