"""Fixed-step closed-loop simulation, metrics and Lyapunov auditing.

The plant is integrated with the classic fourth-order Runge-Kutta scheme.
The control is evaluated once per step from the step-start state and held
constant over the step (zero-order hold).
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from typing import Protocol

import numpy as np

from .controller import ControllerConfig, compute_control
from .errors import SMCError, SolverFailure, StateGuardViolation

__all__ = [
    "AUDIT_C",
    "Plant",
    "SimSettings",
    "Trajectory",
    "Metrics",
    "AuditResult",
    "rk4_step",
    "run_closed_loop",
    "compute_metrics",
    "lyapunov_audit",
    "write_trajectory_csv",
]

# Constant in the audit tolerance c * dt * (1 + max|s'|^2): covers the O(dt)
# gap between the one-step difference quotient of V and its derivative.
AUDIT_C = 1.0


class Plant(Protocol):
    state_names: tuple
    m: int
    x0: np.ndarray

    def derivative(self, t: float, x: np.ndarray, u: np.ndarray) -> np.ndarray: ...
    def sliding(self, t: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...
    def tracked(self, t: float, x: np.ndarray) -> dict: ...
    def check_guard(self, t: float, x: np.ndarray) -> None: ...
    def params_within_bounds(self) -> bool: ...


@dataclass(frozen=True)
class SimSettings:
    dt: float = 1e-3
    horizon: float = 20.0
    seed: int = 0
    smoothing: bool | None = None  # None keeps the controller's own setting
    lyapunov_audit: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt > 1e-2:
            raise ValueError("dt must not exceed 1e-2 s")
        if not self.horizon >= self.dt:
            raise ValueError("horizon must be at least one step")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    s: np.ndarray
    u: np.ndarray
    V: np.ndarray
    patterns_tried: np.ndarray
    on_surface: np.ndarray
    state_names: tuple
    tracked: dict
    dt: float
    params_in_bounds: bool = True
    failure: dict | None = None

    def __len__(self):
        return self.t.shape[0]

    def column(self, name: str) -> np.ndarray:
        if name in self.tracked:
            return self.tracked[name]
        return self.states[:, self.state_names.index(name)]

    def header(self) -> list[str]:
        m = self.s.shape[1]
        return (["t", *self.state_names]
                + [f"s{i + 1}" for i in range(m)]
                + [f"u{i + 1}" for i in range(self.u.shape[1])]
                + ["V", "patterns_tried", "on_surface"])


@dataclass(frozen=True)
class Metrics:
    convergence_time: dict
    overshoot: dict
    rms_error: dict
    max_abs_control: list
    chattering_index: list

    @property
    def converged(self) -> bool:
        return all(v is not None for v in self.convergence_time.values())

    def to_dict(self) -> dict:
        return {
            "convergence_time": dict(self.convergence_time),
            "converged": self.converged,
            "overshoot": dict(self.overshoot),
            "rms_error": dict(self.rms_error),
            "max_abs_control": list(self.max_abs_control),
            "chattering_index": list(self.chattering_index),
        }


@dataclass(frozen=True)
class AuditResult:
    violations: list = field(default_factory=list)
    domain_size: int = 0
    tolerance: float = 0.0
    c: float = AUDIT_C
    boundary: float = 0.0
    skipped: str | None = None

    @property
    def empty_domain(self) -> bool:
        return self.domain_size == 0

    def __len__(self):
        return len(self.violations)

    def to_dict(self) -> dict:
        return {
            "violations": len(self.violations),
            "domain_size": self.domain_size,
            "empty_domain": self.empty_domain,
            "tolerance": self.tolerance,
            "c": self.c,
            "boundary": self.boundary,
            "skipped": self.skipped,
        }


def rk4_step(f, t: float, x: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    h2 = 0.5 * dt
    k1 = f(t, x, u)
    k2 = f(t + h2, x + h2 * k1, u)
    k3 = f(t + h2, x + h2 * k2, u)
    k4 = f(t + dt, x + dt * k3, u)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def run_closed_loop(plant: Plant, controller_cfg: ControllerConfig, sim: SimSettings) -> Trajectory:
    """Integrate plant and controller over ``sim.horizon``.

    On a solver failure or a state guard violation the exception carries
    the time and the state, and the partial trajectory is attached as
    ``exc.trajectory``.
    """
    cfg = controller_cfg
    if sim.smoothing is not None and sim.smoothing != cfg.smoothing:
        cfg = replace(cfg, smoothing=sim.smoothing)
    n = sim.steps
    dt = sim.dt
    m = plant.m
    nx = len(plant.state_names)
    t_arr = np.arange(n + 1) * dt
    X = np.empty((n + 1, nx))
    S = np.empty((n + 1, m))
    U = np.empty((n + 1, m))
    tried = np.zeros(n + 1, dtype=int)
    surface = np.zeros(n + 1, dtype=bool)
    tracked_rows = []

    x = np.array(plant.x0, dtype=float)
    f = plant.derivative
    for k in range(n + 1):
        t = float(t_arr[k])
        try:
            plant.check_guard(t, x)
            s, f0 = plant.sliding(t, x)
            out = compute_control(f0, s, cfg)
        except SMCError as exc:
            partial = _assemble(plant, t_arr[:k], X[:k], S[:k], U[:k], tried[:k], surface[:k],
                                tracked_rows, dt)
            partial.failure = {"t": t, "state": x.tolist(), "error": str(exc)}
            if isinstance(exc, StateGuardViolation):
                err = StateGuardViolation(str(exc), t, x.copy())
            else:
                err = SolverFailure(f"control failed at t={t:g}: {exc}", t, x.copy())
            err.trajectory = partial
            raise err from exc
        X[k] = x
        S[k] = s
        U[k] = out.u
        tried[k] = out.solver.patterns_tried
        surface[k] = out.solver.on_surface
        tracked_rows.append(plant.tracked(t, x))
        if k < n:
            x = rk4_step(f, t, x, out.u, dt)
    return _assemble(plant, t_arr, X, S, U, tried, surface, tracked_rows, dt)


def _assemble(plant, t, X, S, U, tried, surface, tracked_rows, dt) -> Trajectory:
    names = list(tracked_rows[0]) if tracked_rows else list(plant.tracked(0.0, plant.x0))
    tracked = {nm: np.array([row[nm] for row in tracked_rows[:len(t)]], dtype=float) for nm in names}
    return Trajectory(
        t=t.copy(), states=X.copy(), s=S.copy(), u=U.copy(),
        V=0.5 * np.einsum("ij,ij->i", S, S),
        patterns_tried=tried.copy(), on_surface=surface.copy(),
        state_names=tuple(plant.state_names), tracked=tracked, dt=dt,
        params_in_bounds=bool(plant.params_within_bounds()),
    )


def _convergence_time(t: np.ndarray, x: np.ndarray, band: float):
    outside = np.flatnonzero(np.abs(x) > band)
    if outside.size == 0:
        return float(t[0])
    last = outside[-1]
    if last == len(x) - 1:
        return None
    return float(t[last + 1])


def _overshoot(x: np.ndarray) -> float:
    x0 = x[0]
    if x0 == 0:
        return float(np.max(np.abs(x)))
    return float(max(0.0, np.max(-np.sign(x0) * x)))


def compute_metrics(traj: Trajectory, bands: dict, tail_fraction: float = 0.25) -> Metrics:
    """Tracking and effort metrics.

    ``bands`` maps tracked variable names (see ``Trajectory.tracked``, or any
    state name) to tolerance half-widths. A variable converges at the first
    sample after which it never leaves its band again; ``None`` marks a
    variable still outside at the final sample.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    n_tail = max(1, int(math.ceil(tail_fraction * len(traj))))
    conv, over, rms = {}, {}, {}
    for name, band in bands.items():
        x = traj.column(name)
        conv[name] = _convergence_time(traj.t, x, band)
        over[name] = _overshoot(x)
        rms[name] = float(np.sqrt(np.mean(x[-n_tail:] ** 2)))
    return Metrics(
        convergence_time=conv,
        overshoot=over,
        rms_error=rms,
        max_abs_control=np.max(np.abs(traj.u), axis=0).tolist(),
        chattering_index=np.sum(np.abs(np.diff(traj.u, axis=0)), axis=0).tolist(),
    )


def lyapunov_audit(traj: Trajectory, rho: float, boundary: float, c: float = AUDIT_C) -> AuditResult:
    """Check the sampled decrease ``(V(t+dt) - V(t))/dt <= -2 rho V(t) + tol``.

    Only rows with ``max|s| > boundary`` are audited, and only when the
    plant's real parameters lie inside its declared uncertainty box. The
    tolerance is ``c * dt * (1 + max ||s'||^2)`` with ``s'`` estimated by
    forward differences along the trajectory.
    """
    if not traj.params_in_bounds:
        return AuditResult(c=c, boundary=boundary,
                           skipped="real parameters outside the declared uncertainty box")
    if len(traj) < 2:
        return AuditResult(c=c, boundary=boundary)
    dt = traj.dt
    dV = np.diff(traj.V) / dt
    sdot = np.diff(traj.s, axis=0) / dt
    tol = c * dt * (1.0 + float(np.max(np.einsum("ij,ij->i", sdot, sdot))))
    V = traj.V[:-1]
    domain = np.max(np.abs(traj.s[:-1]), axis=1) > boundary
    bad = domain & (dV > -2.0 * rho * V + tol)
    violations = [
        {"row": int(k), "t": float(traj.t[k]), "dV_dt": float(dV[k]), "bound": float(-2.0 * rho * V[k] + tol)}
        for k in np.flatnonzero(bad)
    ]
    return AuditResult(violations=violations, domain_size=int(domain.sum()), tolerance=tol,
                       c=c, boundary=boundary)


def _fmt(v) -> str:
    return repr(float(v))


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write ``traj`` atomically (temporary file, then rename)."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(traj.header())
            for k in range(len(traj)):
                w.writerow([_fmt(traj.t[k]), *map(_fmt, traj.states[k]), *map(_fmt, traj.s[k]),
                            *map(_fmt, traj.u[k]), _fmt(traj.V[k]), int(traj.patterns_tried[k]),
                            int(traj.on_surface[k])])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
