"""Two-link planar manipulator with point masses at the link tips.

Joint angles are absolute and measured from the upward vertical, so gravity
is destabilising. State vector: ``[q1, q1_dot, q2, q2_dot]``. With
``phi = q1 - q2`` the closed forms below use ``sin(phi) = s1 c2 - c1 s2``,
``cos(phi) = s1 s2 + c1 c2`` and the inertia determinant factor
``D = (m1 + m2) - m2 cos(phi)**2 >= m1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DegenerateInertia, StateGuardViolation

STATE_NAMES = ("q1", "q1_dot", "q2", "q2_dot")
UNCERTAIN = ("m1", "m2", "l1", "l2")

DEFAULT_RANGES = {"m1": (0.7, 1.1), "m2": (0.8, 1.4), "l1": (0.9, 1.3), "l2": (0.8, 1.3)}

CASES = {
    1: {"m1": 0.7, "m2": 0.8, "l1": 1.3, "l2": 1.3},
    2: {"m1": 1.1, "m2": 1.4, "l1": 0.9, "l2": 0.8},
    3: {"m1": 0.78, "m2": 0.96, "l1": 1.18, "l2": 0.81},
    4: {"m1": 0.76, "m2": 0.91, "l1": 1.21, "l2": 0.85},
}


@dataclass(frozen=True)
class ManipulatorParams:
    m1: float = 0.9
    m2: float = 1.1
    l1: float = 1.1
    l2: float = 1.05
    g: float = 9.81
    ranges: dict = field(default_factory=lambda: dict(DEFAULT_RANGES))

    def __post_init__(self):
        for name in UNCERTAIN:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.g < 0:
            raise ValueError("g must be nonnegative")
        for name, (lo, hi) in self.ranges.items():
            if name not in UNCERTAIN or not 0 < lo <= hi:
                raise ValueError(f"bad range for {name}: {(lo, hi)}")

    @classmethod
    def midpoint(cls, ranges=None, g: float = 9.81) -> "ManipulatorParams":
        ranges = dict(DEFAULT_RANGES if ranges is None else ranges)
        mids = {n: 0.5 * (lo + hi) for n, (lo, hi) in ranges.items()}
        return cls(g=g, ranges=ranges, **mids)

    @classmethod
    def case(cls, number: int, g: float = 9.81) -> "ManipulatorParams":
        return cls(g=g, **CASES[number])

    def with_values(self, **values) -> "ManipulatorParams":
        return replace(self, **values)

    def within(self, ranges=None) -> bool:
        ranges = self.ranges if ranges is None else ranges
        return all(lo <= getattr(self, n) <= hi for n, (lo, hi) in ranges.items())


@dataclass(frozen=True)
class ManipulatorState:
    q1: float
    q1_dot: float
    q2: float
    q2_dot: float

    def to_array(self) -> np.ndarray:
        return np.array([self.q1, self.q1_dot, self.q2, self.q2_dot], dtype=float)

    @classmethod
    def from_array(cls, x) -> "ManipulatorState":
        return cls(*(float(v) for v in x))


def _trig(x):
    s1, c1 = math.sin(x[0]), math.cos(x[0])
    s3, c3 = math.sin(x[2]), math.cos(x[2])
    return s1, c1, s3, c3, s1 * c3 - c1 * s3, s1 * s3 + c1 * c3


def affine_terms(x, p: ManipulatorParams):
    """``(A2, A4, B)``: accelerations ``[q1'', q2''] = [A2, A4] + B u``."""
    m1, m2, l1, l2, g = p.m1, p.m2, p.l1, p.l2, p.g
    s1, c1, s3, c3, sphi, cphi = _trig(x)
    w1, w2 = x[1] * x[1], x[3] * x[3]
    mt = m1 + m2
    D = mt - m2 * cphi * cphi
    if not D > 1e-12 * mt:
        raise DegenerateInertia(f"inertia determinant factor {D:g} is not positive")
    den = l1 * l2 * D
    A2 = (sphi * (-m2 * l1 * l2 * cphi * w1 - m2 * l2 * l2 * w2)
          + mt * l2 * g * s1 - m2 * l2 * g * s3 * cphi) / den
    A4 = (sphi * (mt * l1 * l1 * w1 + m2 * l1 * l2 * cphi * w2)
          - mt * l1 * g * s1 * cphi + mt * l1 * g * s3) / den
    bden = m2 * l1 * l1 * l2 * l2 * D
    b21 = m2 * l2 * l2 / bden
    b22 = -m2 * l1 * l2 * cphi / bden
    b42 = mt * l1 * l1 / bden
    return A2, A4, ((b21, b22), (b22, b42))


def manipulator_dynamics(state, u, true_params: ManipulatorParams) -> np.ndarray:
    x = state.to_array() if isinstance(state, ManipulatorState) else state
    A2, A4, B = affine_terms(x, true_params)
    u1, u2 = float(u[0]), float(u[1])
    return np.array([x[1], A2 + B[0][0] * u1 + B[0][1] * u2,
                     x[3], A4 + B[1][0] * u1 + B[1][1] * u2])


def manipulator_gain(p: ManipulatorParams, phi: float = 0.0) -> np.ndarray:
    """Control gain of ``[q1'', q2'']`` at relative angle ``phi = q1 - q2``."""
    _, _, B = affine_terms((phi, 0.0, 0.0, 0.0), p)
    return np.array(B)


def target_trajectory(t: float, amplitude: float = 0.01, omega: float = 5.0,
                      phase: float = math.pi / 2):
    """Reference ``q_d = amplitude * sin(omega t + phase)`` for both joints.

    Returns ``(q_d, q_d_dot, q_d_ddot)`` as length-2 arrays.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    arg = omega * t + phase
    q = amplitude * math.sin(arg)
    qd = amplitude * omega * math.cos(arg)
    qdd = -amplitude * omega * omega * math.sin(arg)
    return np.array([q, q]), np.array([qd, qd]), np.array([qdd, qdd])


def manipulator_sliding(state, target, alpha: float, nominal: ManipulatorParams | None = None):
    """``s = e' + alpha e`` and the nominal drift of ``s'``.

    ``target`` is ``(q_d, q_d_dot, q_d_ddot)``; the reference acceleration
    enters the drift so that ``s' = f0 + G u`` holds exactly for nominal
    parameters.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    p = ManipulatorParams.midpoint() if nominal is None else nominal
    x = state.to_array() if isinstance(state, ManipulatorState) else np.asarray(state, dtype=float)
    q_d, qd_d, qdd_d = (np.asarray(v, dtype=float) for v in target)
    e = np.array([x[0], x[2]]) - q_d
    e_dot = np.array([x[1], x[3]]) - qd_d
    s = e_dot + alpha * e
    A2, A4, B = affine_terms(x, p)
    f0 = np.array([A2, A4]) - qdd_d + alpha * e_dot
    return s, f0, np.array(B)


class Manipulator:
    """Closed-loop plant wrapper used by the simulator."""

    kind = "manipulator"
    state_names = STATE_NAMES
    m = 2

    def __init__(self, nominal: ManipulatorParams, true_params: ManipulatorParams,
                 alpha: float = 5.0, x0=None, target=target_trajectory):
        self.nominal = nominal
        self.true_params = true_params
        self.alpha = float(alpha)
        self.x0 = np.zeros(4) if x0 is None else np.asarray(x0, dtype=float)
        self.target = target

    def derivative(self, t, x, u):
        return manipulator_dynamics(x, u, self.true_params)

    def sliding(self, t, x):
        s, f0, _ = manipulator_sliding(x, self.target(t), self.alpha, self.nominal)
        return s, f0

    def true_sliding_model(self, t, x):
        return manipulator_sliding(x, self.target(t), self.alpha, self.true_params)

    def tracked(self, t, x) -> dict:
        q_d = self.target(t)[0]
        return {"e1": x[0] - q_d[0], "e2": x[2] - q_d[1]}

    def check_guard(self, t, x):
        if not np.all(np.isfinite(x)):
            raise StateGuardViolation(f"non-finite state at t={t:g}", t, x)

    def params_within_bounds(self) -> bool:
        return self.true_params.within(self.nominal.ranges)


def lagrangian_matrices(x, p: ManipulatorParams):
    """Inertia, Coriolis and gravity terms of ``M q'' + C q' + G = tau``."""
    q1, q1d, q2, q2d = x
    phi = q1 - q2
    h = p.m2 * p.l1 * p.l2
    Mq = np.array([[(p.m1 + p.m2) * p.l1 ** 2, h * np.cos(phi)],
                   [h * np.cos(phi), p.m2 * p.l2 ** 2]])
    C = np.array([[0.0, h * np.sin(phi) * q2d],
                  [-h * np.sin(phi) * q1d, 0.0]])
    G = np.array([-(p.m1 + p.m2) * p.g * p.l1 * np.sin(q1), -p.m2 * p.g * p.l2 * np.sin(q2)])
    return Mq, C, G


def mechanical_energy(x, p: ManipulatorParams) -> float:
    Mq, _, _ = lagrangian_matrices(x, p)
    qd = np.array([x[1], x[3]])
    potential = p.g * ((p.m1 + p.m2) * p.l1 * math.cos(x[0]) + p.m2 * p.l2 * math.cos(x[2]))
    return 0.5 * float(qd @ Mq @ qd) + potential
