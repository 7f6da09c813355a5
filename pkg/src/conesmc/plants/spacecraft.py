"""Liquid-filled spacecraft with a pendulum fuel-slosh model.

Body-frame transverse velocity ``v_z``, attitude ``theta`` and slosh angle
``psi`` obey ``N(psi) [v_z', theta'', psi''] = G_x + G_u u`` with
``u = [f, M_pitch]``. The sliding variables are
``s = e' + lambda1 e + lambda2 int(e)`` with ``e = [theta, psi]``.

Simulation state vector (8 entries)::

    [v_z, theta, theta_dot, psi, psi_dot, v_x, int_theta, int_psi]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InfeasibleScale, SingularMassMatrix, StateGuardViolation

STATE_NAMES = ("v_z", "theta", "theta_dot", "psi", "psi_dot", "v_x", "int_theta", "int_psi")
UNCERTAIN = ("m", "m_f", "I_f", "a", "epsilon")

_DEG = math.pi / 180.0


@dataclass(frozen=True)
class SpacecraftParams:
    """Physical parameters plus relative uncertainty bounds.

    ``bounds`` maps each uncertain parameter name to its basic relative
    bound; the real value lies in ``nominal * (1 + k * [-bound, bound])``.
    """

    m: float = 600.0
    m_f: float = 1000.0
    I: float = 720.0
    I_f: float = 90.0
    a: float = 0.32
    b: float = 0.25
    F_thrust: float = 1000.0
    epsilon: float = 0.0019
    k: float = 1.0
    bounds: dict = field(default_factory=lambda: {
        "m": 0.1, "m_f": 0.1, "I_f": 0.05, "a": 0.05, "epsilon": 0.03})

    def __post_init__(self):
        for name in ("m", "m_f", "I", "I_f", "a", "b", "F_thrust"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if set(self.bounds) != set(UNCERTAIN):
            raise ValueError(f"bounds must name exactly {UNCERTAIN}")
        for name, bnd in self.bounds.items():
            if not 0 <= bnd < 1:
                raise ValueError(f"bound for {name} must lie in [0, 1)")
        if self.k < 1:
            raise InfeasibleScale(f"k must be >= 1, got {self.k}")
        for name, bnd in self.bounds.items():
            if self.k * bnd >= 1:
                raise InfeasibleScale(f"k * bound for {name} is {self.k * bnd:g} >= 1")

    def interval(self, name: str) -> tuple[float, float]:
        nom = getattr(self, name)
        r = self.k * self.bounds[name]
        return nom * (1 - r), nom * (1 + r)

    def scaled(self, **relative) -> "SpacecraftParams":
        """Copy with ``name -> nominal * (1 + k * delta)`` for each given delta."""
        values = {n: getattr(self, n) * (1 + self.k * d) for n, d in relative.items()}
        return replace(self, **values)

    def within(self, nominal: "SpacecraftParams", slack: float = 1e-12) -> bool:
        for name in UNCERTAIN:
            lo, hi = nominal.interval(name)
            v = getattr(self, name)
            if not lo * (1 - slack) <= v <= hi * (1 + slack):
                return False
        return all(getattr(self, n) == getattr(nominal, n) for n in ("I", "b", "F_thrust"))


@dataclass(frozen=True)
class SpacecraftState:
    v_z: float
    theta: float
    theta_dot: float
    psi: float
    psi_dot: float
    v_x: float
    integral_e: tuple[float, float] = (0.0, 0.0)

    def to_array(self) -> np.ndarray:
        return np.array([self.v_z, self.theta, self.theta_dot, self.psi, self.psi_dot,
                         self.v_x, *self.integral_e], dtype=float)

    @classmethod
    def from_array(cls, x) -> "SpacecraftState":
        x = [float(v) for v in x]
        return cls(*x[:6], integral_e=(x[6], x[7]))

    @classmethod
    def initial(cls) -> "SpacecraftState":
        """Benchmark initial condition (angles in degrees converted to rad)."""
        return cls(v_z=105.0, theta=2 * _DEG, theta_dot=0.57 * _DEG, psi=5 * _DEG,
                   psi_dot=0.5 * _DEG, v_x=3000.0)


def sample_spacecraft_params(nominal: SpacecraftParams, k: float, seed) -> SpacecraftParams:
    """Draw real parameters: each basic uncertainty uniform in ``[-bound, bound]``."""
    box = replace(nominal, k=float(k))  # validates k * bound < 1
    rng = np.random.default_rng(seed)
    deltas = {name: rng.uniform(-box.bounds[name], box.bounds[name]) for name in UNCERTAIN}
    return box.scaled(**deltas)


def _mass_matrix(p: SpacecraftParams, cpsi: float):
    mfa = p.m_f * p.a * cpsi
    mb = p.m * p.b
    J = p.I_f + p.m_f * p.a * p.a
    return ((p.m + p.m_f, mfa + mb, mfa),
            (mb, p.I + mb * p.b, 0.0),
            (mfa, J, J))


def _inverse3(N):
    (a, b, c), (d, e, f), (g, h, i) = N
    A = e * i - f * h
    B = -(d * i - f * g)
    C = d * h - e * g
    det = a * A + b * B + c * C
    scale = abs(a * e * i) + abs(b * f * g) + abs(c * d * h) + abs(c * e * g) + abs(b * d * i) + abs(a * f * h)
    if not abs(det) > 1e-12 * scale:
        raise SingularMassMatrix(f"mass matrix determinant {det:g} is numerically zero")
    r = 1.0 / det
    return ((A * r, -(b * i - c * h) * r, (b * f - c * e) * r),
            (B * r, (a * i - c * g) * r, -(a * f - c * d) * r),
            (C * r, -(a * h - b * g) * r, (a * e - b * d) * r))


def _drift_forces(p: SpacecraftParams, x):
    theta_dot, psi, psi_dot, v_x = x[2], x[3], x[4], x[5]
    spsi, cpsi = math.sin(psi), math.cos(psi)
    mfa = p.m_f * p.a
    w = theta_dot + psi_dot
    gx = ((p.m + p.m_f) * theta_dot * v_x + mfa * w * w * spsi,
          p.m * p.b * theta_dot * v_x,
          -p.epsilon * psi_dot - mfa * p.F_thrust / (p.m + p.m_f) * spsi + mfa * theta_dot * v_x * cpsi)
    return cpsi, gx


def accelerations(x, u, p: SpacecraftParams) -> tuple[float, float, float]:
    """``(v_z', theta'', psi'')`` from the mass-matrix balance."""
    cpsi, gx = _drift_forces(p, x)
    f, torque = float(u[0]), float(u[1])
    rhs = (gx[0] + f, gx[1] + p.b * f + torque, gx[2])
    Ni = _inverse3(_mass_matrix(p, cpsi))
    return tuple(Ni[r][0] * rhs[0] + Ni[r][1] * rhs[1] + Ni[r][2] * rhs[2] for r in range(3))


def affine_terms(x, p: SpacecraftParams):
    """``(a, B)`` with ``[v_z', theta'', psi''] = a + B u`` (a: 3, B: 3x2)."""
    cpsi, gx = _drift_forces(p, x)
    Ni = _inverse3(_mass_matrix(p, cpsi))
    a = np.array([Ni[r][0] * gx[0] + Ni[r][1] * gx[1] + Ni[r][2] * gx[2] for r in range(3)])
    B = np.array([[Ni[r][0] + Ni[r][1] * p.b, Ni[r][1]] for r in range(3)])
    return a, B


def spacecraft_dynamics(state, u, true_params: SpacecraftParams, *, hold_vx: bool = False) -> np.ndarray:
    """Time derivative of the 8-entry simulation state.

    ``v_x`` accelerates under constant axial thrust ``F/(m + m_f)`` unless
    ``hold_vx``; the integral states accumulate ``e = [theta, psi]``.
    """
    x = state.to_array() if isinstance(state, SpacecraftState) else state
    vz_dot, th_dd, ps_dd = accelerations(x, u, true_params)
    vx_dot = 0.0 if hold_vx else true_params.F_thrust / (true_params.m + true_params.m_f)
    return np.array([vz_dot, x[2], th_dd, x[4], ps_dd, vx_dot, x[1], x[3]])


def spacecraft_gain(p: SpacecraftParams, psi: float = 0.0) -> np.ndarray:
    """Sliding-variable gain ``G(x)``: rows theta'' and psi'' of ``N^-1 G_u``."""
    x = (0.0, 0.0, 0.0, psi, 0.0, 0.0)
    return affine_terms(x, p)[1][1:]


def spacecraft_sliding(state, lambda1: float, lambda2: float,
                       nominal: SpacecraftParams | None = None):
    """Sliding variables and their nominal drift.

    Returns
    -------
    s : ndarray (2,)
    f0 : ndarray (2,)
        Drift of ``s'`` under the nominal parameters.
    G : ndarray (2, 2)
        Nominal control gain of ``s'`` at this state.
    """
    if not (lambda1 > 0 and lambda2 > 0):
        raise ValueError("lambda1 and lambda2 must be positive")
    p = SpacecraftParams() if nominal is None else nominal
    x = state.to_array() if isinstance(state, SpacecraftState) else np.asarray(state, dtype=float)
    e = np.array([x[1], x[3]])
    e_dot = np.array([x[2], x[4]])
    s = e_dot + lambda1 * e + lambda2 * x[6:8]
    a, B = affine_terms(x, p)
    f0 = a[1:] + lambda1 * e_dot + lambda2 * e
    return s, f0, B[1:]


class Spacecraft:
    """Closed-loop plant wrapper used by the simulator."""

    kind = "spacecraft"
    state_names = STATE_NAMES
    m = 2

    def __init__(self, nominal: SpacecraftParams, true_params: SpacecraftParams,
                 lambda1: float = 50.0, lambda2: float = 125.0,
                 x0=None, hold_vx: bool = False, psi_limit: float = math.pi / 2):
        self.nominal = nominal
        self.true_params = true_params
        self.lambda1 = float(lambda1)
        self.lambda2 = float(lambda2)
        self.x0 = SpacecraftState.initial().to_array() if x0 is None else np.asarray(x0, dtype=float)
        self.hold_vx = hold_vx
        self.psi_limit = psi_limit

    def derivative(self, t, x, u):
        return spacecraft_dynamics(x, u, self.true_params, hold_vx=self.hold_vx)

    def sliding(self, t, x):
        s, f0, _ = spacecraft_sliding(x, self.lambda1, self.lambda2, self.nominal)
        return s, f0

    def true_sliding_model(self, t, x):
        """``(s, f, G)`` with ``s' = f + G u`` under the real parameters."""
        s, f, G = spacecraft_sliding(x, self.lambda1, self.lambda2, self.true_params)
        return s, f, G

    def tracked(self, t, x) -> dict:
        return {"theta": x[1], "psi": x[3], "v_z": x[0]}

    def check_guard(self, t, x):
        if not np.all(np.isfinite(x)):
            raise StateGuardViolation(f"non-finite state at t={t:g}", t, x)
        if abs(x[3]) >= self.psi_limit:
            raise StateGuardViolation(f"|psi| = {abs(x[3]):.4g} rad left the pendulum regime at t={t:g}", t, x)

    def params_within_bounds(self) -> bool:
        return self.true_params.within(self.nominal)
