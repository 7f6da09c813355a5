"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL (...)`` line; the lines are
repeated together in the pytest terminal summary.
"""

import copy
import json
import math
import time

import numpy as np
import pytest

from conesmc.certify import random_admissible_H, run_suite
from conesmc.cli import main as cli_main
from conesmc.cone_solver import (
    SolveInstance,
    distinct_controls,
    equation_residual,
    exhaustive_solutions,
    solve_control_equation,
)
from conesmc.config import build_experiment, load_config, manipulator_case_condition
from conesmc.controller import check_admissibility
from conesmc.plants.manipulator import ManipulatorParams, manipulator_dynamics, mechanical_energy
from conesmc.plants.spacecraft import spacecraft_dynamics
from conesmc.sign_algebra import induced_norm
from conesmc.simulator import SimSettings, compute_metrics, lyapunov_audit, rk4_step, run_closed_loop

from oracles import (
    manipulator_oracle,
    random_manipulator_params,
    random_spacecraft_params,
    random_spacecraft_state,
    rel_err,
    spacecraft_oracle,
)

RESULTS = []

SPACECRAFT_BOUND = [[0.96, 0.13], [0.09, 0.01]]
MANIPULATOR_BOUND = [[0.79, 0.20], [0.18, 0.68]]
REFERENCE_NORMS = {"spacecraft": 0.97, "manipulator": 0.93}


def report(label, ok, detail):
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_1_solver_correctness():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    failures = 0
    worst = 0.0
    for _ in range(10_000):
        m = int(rng.integers(1, 7))
        H = random_admissible_H(rng, m, 0.95)
        u_c = rng.standard_normal(m) * rng.uniform(0.1, 10.0)
        inst = SolveInstance(H, u_c)
        res = solve_control_equation(inst)
        oracle = distinct_controls(exhaustive_solutions(inst))
        scale = 1.0 + np.abs(u_c).max()
        r = equation_residual(res.u_hat, H, u_c) / scale
        worst = max(worst, r)
        if r > 1e-9 or len(oracle) != 1 or np.abs(res.u_hat - oracle[0]).max() > 1e-9 * scale:
            failures += 1
    elapsed = time.perf_counter() - start
    report(1, failures == 0 and elapsed < 10.0,
           f"10000 instances, {failures} failures, worst scaled residual {worst:.1e}, {elapsed:.1f} s")


def test_criterion_2_certification_suites():
    reps = {name: run_suite(name, trials=1000, seed=0) for name in ("cones", "uniqueness", "theorem3")}
    t3 = reps["theorem3"].stats
    per_norm = t3["verified_by_norm"]
    ok = (all(r.passed for r in reps.values())
          and t3["verified_instances"] >= 100
          and all(per_norm[str(n)] > 0 for n in (1.0, 1.5, 3.0)))
    detail = ", ".join(f"{n}: {r.failures} failures/{r.checks} checks" for n, r in reps.items())
    report(2, ok, f"{detail}; theorem3 verified {t3['verified_instances']} {per_norm}")


def test_criterion_3_reference_norms():
    sc = induced_norm(SPACECRAFT_BOUND, "two")
    mp = induced_norm(MANIPULATOR_BOUND, "two")
    ok = abs(sc - 0.97) <= 0.01 and abs(mp - 0.93) <= 0.01
    report(3, ok, f"spacecraft {sc:.4f}, manipulator {mp:.4f}")


def test_criterion_4_identity_separation():
    rep = check_admissibility(0.9 * np.eye(3))
    ok = rep.admissible is True and rep.max_entry_condition is False
    report(4, ok, f"admissible={rep.admissible}, max-entry < 1/3: {rep.max_entry_condition}")


def _decompose(config, tmp_path, tag):
    out = tmp_path / tag
    start = time.perf_counter()
    code = cli_main(["decompose", "--config", config, "--seed", "0", "--out", str(out)])
    elapsed = time.perf_counter() - start
    return code, json.loads((out / f"{config}_decomposition.json").read_text()), elapsed


@pytest.mark.parametrize("plant,config", [("spacecraft", "spacecraft_k1"),
                                          ("manipulator", "manipulator_case1")])
def test_criterion_5_decomposition(plant, config, tmp_path):
    code, rep, elapsed = _decompose(config, tmp_path, "a")
    _, rep2, elapsed2 = _decompose(config, tmp_path, "b")
    two = rep["norms"]["two"]
    ceiling = 1.05 * REFERENCE_NORMS[plant]
    deterministic = rep["F_bar"] == rep2["F_bar"] and rep["M"] == rep2["M"]
    ok = code == 0 and two < 1.0 and two <= ceiling and deterministic and max(elapsed, elapsed2) < 60
    report(f"5 {plant}", ok,
           f"two-norm {two:.4f} vs ceiling {ceiling:.4f}, exit {code}, "
           f"deterministic={deterministic}, {max(elapsed, elapsed2):.1f} s")


def _spacecraft_run(cfg, seed, smoothing=None):
    exp = build_experiment(cfg, seed=seed)
    sim = exp.sim if smoothing is None else SimSettings(dt=exp.sim.dt, horizon=exp.sim.horizon,
                                                       seed=seed, smoothing=smoothing)
    start = time.perf_counter()
    traj = run_closed_loop(exp.plant, exp.controller, sim)
    metrics = compute_metrics(traj, exp.bands, exp.tail_fraction)
    audit = lyapunov_audit(traj, exp.controller.rho, exp.audit_boundary, exp.audit_c)
    return exp, traj, metrics, audit, time.perf_counter() - start


@pytest.mark.parametrize("config", ["spacecraft_k1", "spacecraft_k7"])
def test_criterion_6_spacecraft_closed_loop(config):
    cfg, _ = load_config(config)
    ctrl = cfg["controller"]
    assert (cfg["sliding"]["lambda1"], cfg["sliding"]["lambda2"]) == (50.0, 125.0)
    assert ctrl["rho"] == 0.5 and ctrl["f_bar"] == [0.5, 0.5] and not ctrl["smoothing"]
    assert cfg["sim"]["dt"] == 1e-3 and cfg["sim"]["horizon"] == 20.0
    bad, worst_t, worst_conv, violations = [], 0.0, 0.0, 0
    for seed in range(50):
        exp, traj, metrics, audit, elapsed = _spacecraft_run(cfg, seed)
        assert exp.bands["theta"] == pytest.approx(math.radians(0.1))
        assert exp.bands["v_z"] == 1.0
        worst_t = max(worst_t, elapsed)
        violations += len(audit)
        if metrics.converged:
            worst_conv = max(worst_conv, max(metrics.convergence_time.values()))
        if not metrics.converged or len(audit) or audit.skipped or elapsed >= 5.0:
            bad.append(seed)
    report(f"6 {config}", not bad,
           f"50 seeds, failing seeds {bad}, audit violations {violations}, "
           f"latest band entry {worst_conv:.2f} s, slowest run {worst_t:.2f} s")


@pytest.mark.parametrize("case", [1, 2, 3, 4])
def test_criterion_7_manipulator_tracking(case):
    cfg, _ = load_config(f"manipulator_case{case}")
    assert cfg["sim"]["horizon"] == 10.0
    exp = build_experiment(cfg)
    traj = run_closed_loop(exp.plant, exp.controller, exp.sim)
    after = traj.t >= 2.0
    peak = [float(np.max(np.abs(traj.column(n)[after]))) for n in ("e1", "e2")]
    ok = max(peak) < 1e-3
    detail = f"max |e| after 2 s = ({peak[0]:.2e}, {peak[1]:.2e}) rad"
    if case in (3, 4):
        cond = manipulator_case_condition(cfg)
        by_norm = check_admissibility(cfg["controller"]["F_bar"]).admissible
        ok = ok and cond["max_element"] > 0.5 and not cond["below_1_over_m"] and by_norm
        detail += (f"; element-wise bound {np.round(cond['relative_ubm'], 2).tolist()} "
                   f"violates 1/2, norm condition holds: {by_norm}")
    report(f"7 case {case}", ok, detail)


def test_criterion_8_chattering():
    cfg, _ = load_config("spacecraft_k1")
    _, _, off, _, _ = _spacecraft_run(cfg, 0, smoothing=False)
    _, _, on, _, _ = _spacecraft_run(cfg, 0, smoothing=True)
    ratios = [a / b for a, b in zip(on.chattering_index, off.chattering_index)]
    ok = all(r <= 0.1 for r in ratios) and on.converged
    report(8, ok, f"TV ratio on/off {[f'{r:.2e}' for r in ratios]}, bands hold with smoothing: {on.converged}")


def test_criterion_9_dynamics_oracles():
    rng = np.random.default_rng(99)
    sc_worst = mp_worst = 0.0
    for _ in range(20):
        sp = random_spacecraft_params(rng, k=float(rng.uniform(1, 7)))
        mp = random_manipulator_params(rng)
        for _ in range(1000):
            x = random_spacecraft_state(rng)
            u = rng.uniform(-500, 500, 2)
            sc_worst = max(sc_worst, rel_err(spacecraft_dynamics(x, u, sp), spacecraft_oracle(x, u, sp)))
            q = rng.uniform(-np.pi, np.pi, 4) * np.array([1, 3, 1, 3])
            tau = rng.uniform(-20, 20, 2)
            mp_worst = max(mp_worst, rel_err(manipulator_dynamics(q, tau, mp), manipulator_oracle(q, tau, mp)))

    p = ManipulatorParams.case(1, g=0.0)
    x = np.array([0.4, 1.2, -0.3, -0.8])
    e0 = mechanical_energy(x, p)

    def f(t, x, u):
        return manipulator_dynamics(x, u, p)

    u = np.zeros(2)
    for k in range(10_000):
        x = rk4_step(f, k * 1e-3, x, u, 1e-3)
    drift = abs(mechanical_energy(x, p) - e0) / abs(e0)
    ok = sc_worst < 1e-8 and mp_worst < 1e-8 and drift < 1e-6
    report(9, ok, f"spacecraft rel err {sc_worst:.1e}, manipulator rel err {mp_worst:.1e}, "
                  f"zero-gravity energy drift {drift:.1e}")
