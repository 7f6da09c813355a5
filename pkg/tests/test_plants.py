import math

import numpy as np
import pytest

from conesmc.errors import InfeasibleScale
from conesmc.plants.manipulator import (
    CASES,
    Manipulator,
    ManipulatorParams,
    lagrangian_matrices,
    manipulator_dynamics,
    manipulator_sliding,
    mechanical_energy,
    target_trajectory,
)
from conesmc.plants.spacecraft import (
    UNCERTAIN,
    Spacecraft,
    SpacecraftParams,
    SpacecraftState,
    sample_spacecraft_params,
    spacecraft_dynamics,
    spacecraft_sliding,
)
from conesmc.simulator import rk4_step

from oracles import (
    manipulator_oracle,
    random_manipulator_params,
    random_spacecraft_params,
    random_spacecraft_state,
    rel_err,
    spacecraft_oracle,
)

DEG = math.pi / 180


# -- spacecraft -----------------------------------------------------------------

class TestSpacecraftParams:
    def test_zero_bounds_give_nominal(self):
        nom = SpacecraftParams(bounds={n: 0.0 for n in UNCERTAIN})
        assert sample_spacecraft_params(nom, 1, 3) == nom

    def test_k7_mass_interval_and_coverage(self):
        nom = SpacecraftParams()
        draws = np.array([sample_spacecraft_params(nom, 7, s).m for s in range(10_000)])
        lo, hi = 600 * 0.3, 600 * 1.7
        assert draws.min() >= lo and draws.max() <= hi
        assert (draws.max() - draws.min()) > 0.99 * (hi - lo)

    def test_seed_deterministic(self):
        nom = SpacecraftParams()
        assert sample_spacecraft_params(nom, 3, 42) == sample_spacecraft_params(nom, 3, 42)

    def test_infeasible_scale(self):
        with pytest.raises(InfeasibleScale):
            sample_spacecraft_params(SpacecraftParams(), 11, 0)

    def test_drawn_params_within_box(self):
        nom = SpacecraftParams(k=7)
        assert all(sample_spacecraft_params(nom, 7, s).within(nom) for s in range(50))


class TestSpacecraftDynamics:
    def test_equilibrium(self):
        x = np.array([3.0, 0.2, 0.0, 0.0, 0.0, 1000.0, 0.0, 0.0])
        d = spacecraft_dynamics(x, np.zeros(2), SpacecraftParams(), hold_vx=True)
        assert np.array_equal(d[[0, 2, 4]], np.zeros(3))

    def test_initial_condition_finite(self):
        d = spacecraft_dynamics(SpacecraftState.initial(), np.zeros(2), SpacecraftParams())
        assert np.all(np.isfinite(d))

    def test_matches_oracle(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(20):
            p = random_spacecraft_params(rng, k=float(rng.choice([1, 7])))
            for _ in range(50):
                x = random_spacecraft_state(rng)
                u = rng.uniform(-500, 500, 2)
                worst = max(worst, rel_err(spacecraft_dynamics(x, u, p), spacecraft_oracle(x, u, p)))
        assert worst < 1e-10

    def test_mass_matrix_conditioning_k7(self):
        nom = SpacecraftParams(k=7)
        worst = 0.0
        for corner in np.ndindex(*(3,) * len(UNCERTAIN)):
            p = nom.scaled(**{n: (c - 1) * nom.bounds[n] for n, c in zip(UNCERTAIN, corner)})
            for ps in np.linspace(-30, 30, 61) * DEG:
                c = math.cos(ps)
                N = np.array([
                    [p.m + p.m_f, p.m_f * p.a * c + p.m * p.b, p.m_f * p.a * c],
                    [p.m * p.b, p.I + p.m * p.b ** 2, 0.0],
                    [p.m_f * p.a * c, p.I_f + p.m_f * p.a ** 2, p.I_f + p.m_f * p.a ** 2],
                ])
                worst = max(worst, np.linalg.cond(N))
        assert worst < 1e6


class TestSpacecraftSliding:
    def test_origin(self):
        s, _, _ = spacecraft_sliding(np.zeros(8), 50, 125)
        assert np.array_equal(s, np.zeros(2))

    def test_initial_condition(self):
        s, f0, G = spacecraft_sliding(SpacecraftState.initial(), 50, 125)
        assert np.all(np.isfinite(s)) and np.all(s != 0)
        assert G.shape == (2, 2)

    def test_bad_gains(self):
        with pytest.raises(ValueError):
            spacecraft_sliding(np.zeros(8), 0.0, 1.0)

    def test_nominal_equals_true_when_equal(self):
        nom = SpacecraftParams()
        plant = Spacecraft(nom, nom)
        x = SpacecraftState.initial().to_array()
        s, f0 = plant.sliding(0.0, x)
        s2, f, _ = plant.true_sliding_model(0.0, x)
        assert np.array_equal(s, s2) and np.array_equal(f0, f)

    def test_finite_difference(self):
        rng = np.random.default_rng(1)
        p = random_spacecraft_params(rng)
        plant = Spacecraft(SpacecraftParams(), p)
        x = SpacecraftState.initial().to_array()
        u = np.array([30.0, -20.0])
        s, f, G = plant.true_sliding_model(0.0, x)
        exact = f + G @ u
        errs = []
        for h in (1e-4, 5e-5):
            x1 = rk4_step(plant.derivative, 0.0, x, u, h)
            errs.append(np.max(np.abs((plant.sliding(h, x1)[0] - s) / h - exact)))
        assert errs[1] < 0.6 * errs[0] + 1e-9
        assert errs[1] < 1e-3 * max(1.0, np.abs(exact).max())


# -- manipulator ---------------------------------------------------------------

class TestManipulatorDynamics:
    def test_equilibrium(self):
        d = manipulator_dynamics(np.zeros(4), np.zeros(2), ManipulatorParams())
        assert np.array_equal(d, np.zeros(4))

    def test_case1_random_state(self):
        rng = np.random.default_rng(2)
        p = ManipulatorParams.case(1)
        x = rng.uniform(-np.pi, np.pi, 4)
        u = rng.uniform(-10, 10, 2)
        assert rel_err(manipulator_dynamics(x, u, p), manipulator_oracle(x, u, p)) < 1e-8

    def test_matches_oracle(self):
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(20):
            p = random_manipulator_params(rng)
            Mq_check = []
            for _ in range(50):
                x = rng.uniform(-np.pi, np.pi, 4) * np.array([1, 3, 1, 3])
                u = rng.uniform(-20, 20, 2)
                worst = max(worst, rel_err(manipulator_dynamics(x, u, p), manipulator_oracle(x, u, p)))
                Mq, C, G = lagrangian_matrices(x, p)
                qdd = manipulator_dynamics(x, u, p)[[1, 3]]
                Mq_check.append(np.max(np.abs(Mq @ qdd + C @ x[[1, 3]] + G - u)))
            assert max(Mq_check) < 1e-9
        assert worst < 1e-8

    def test_denominator_bounded_below(self):
        q = np.linspace(-np.pi, np.pi, 201)
        Q1, Q2 = np.meshgrid(q, q)
        for p in (ManipulatorParams.case(n) for n in CASES):
            cphi = np.sin(Q1) * np.sin(Q2) + np.cos(Q1) * np.cos(Q2)
            D = (p.m1 + p.m2) - p.m2 * cphi ** 2
            assert D.min() >= p.m1 - 1e-12

    def test_zero_gravity_energy(self):
        p = ManipulatorParams.case(2, g=0.0)
        x = np.array([0.3, 1.0, -0.5, -0.7])
        e0 = mechanical_energy(x, p)

        def f(t, x, u):
            return manipulator_dynamics(x, u, p)

        u = np.zeros(2)
        dt = 1e-3
        for k in range(10_000):
            x = rk4_step(f, k * dt, x, u, dt)
        assert abs(mechanical_energy(x, p) - e0) / e0 < 1e-6

    def test_energy_conserved_with_gravity(self):
        # gravity is conservative too; catches sign errors in the potential
        p = ManipulatorParams.case(3)
        x = np.array([0.05, 0.0, -0.04, 0.0])
        e0 = mechanical_energy(x, p)

        def f(t, x, u):
            return manipulator_dynamics(x, u, p)

        for k in range(1000):
            x = rk4_step(f, k * 1e-3, x, np.zeros(2), 1e-3)
        assert abs(mechanical_energy(x, p) - e0) < 1e-8 * abs(e0)


class TestTarget:
    def test_t0(self):
        q, qd, qdd = target_trajectory(0.0)
        assert np.allclose(q, 0.01) and np.allclose(qd, 0.0, atol=1e-15) and np.allclose(qdd, -0.25)

    def test_zero_crossing(self):
        assert np.allclose(target_trajectory(math.pi / 10)[0], 0.0, atol=1e-15)

    def test_harmonic_identity(self):
        for t in np.linspace(0, 10, 101):
            q, _, qdd = target_trajectory(t)
            assert np.allclose(qdd, -25 * q, atol=1e-15)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            target_trajectory(-1.0)


class TestManipulatorSliding:
    def test_on_target(self):
        tgt = target_trajectory(0.3)
        x = np.array([tgt[0][0], tgt[1][0], tgt[0][1], tgt[1][1]])
        s, _, _ = manipulator_sliding(x, tgt, 5.0)
        assert np.array_equal(s, np.zeros(2))

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            manipulator_sliding(np.zeros(4), target_trajectory(0.0), 0.0)

    def test_finite_difference(self):
        p = ManipulatorParams.case(3)
        plant = Manipulator(ManipulatorParams.midpoint(), p, alpha=5.0)
        x = np.array([0.02, -0.1, -0.01, 0.2])
        u = np.array([1.0, -2.0])
        t = 0.4
        s, f, G = plant.true_sliding_model(t, x)
        exact = f + np.asarray(G) @ u
        errs = []
        for h in (1e-4, 5e-5):
            x1 = rk4_step(plant.derivative, t, x, u, h)
            errs.append(np.max(np.abs((plant.sliding(t + h, x1)[0] - s) / h - exact)))
        assert errs[1] < 0.6 * errs[0] + 1e-9
