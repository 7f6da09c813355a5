"""Randomised certification suites for the solver and the control law.

Each suite draws ``trials`` seeded random cases, checks one family of
properties and returns a :class:`CertificationReport`. A suite passes iff it
records zero failures; the first few counterexamples are kept in a
JSON-serialisable form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cone_solver import (
    SolveInstance,
    classify_cone_membership,
    construct_nonunique_instance,
    distinct_controls,
    equation_residual,
    exhaustive_solutions,
    solve_control_equation,
    zero_tolerance,
)
from .controller import ControllerConfig, GainDecomposition, compute_control
from .errors import SMCError
from .sign_algebra import SignPattern, enumerate_sign_patterns, induced_norm

__all__ = ["SUITES", "CertificationReport", "run_suite", "random_admissible_H"]

MAX_COUNTEREXAMPLES = 5
THEOREM3_NORMS = (1.0, 1.5, 3.0)


@dataclass
class CertificationReport:
    suite: str
    trials: int
    seed: int
    failures: int = 0
    checks: int = 0
    counterexamples: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def fail(self, kind: str, **data) -> None:
        self.failures += 1
        if len(self.counterexamples) < MAX_COUNTEREXAMPLES:
            self.counterexamples.append({"property": kind, **_jsonable(data)})

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "trials": self.trials,
            "seed": self.seed,
            "checks": self.checks,
            "failures": self.failures,
            "passed": self.passed,
            "counterexamples": self.counterexamples,
            "stats": _jsonable(self.stats),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, SignPattern):
        return obj.diag.tolist()
    return obj


def random_admissible_H(rng: np.random.Generator, m: int, max_norm: float = 0.95) -> np.ndarray:
    """Random ``H`` rescaled to an infinity norm drawn uniformly in ``[0, max_norm]``."""
    H = rng.standard_normal((m, m))
    return H * (rng.uniform(0.0, max_norm) / induced_norm(H, "infinity"))


def _random_dim(rng, lo=1, hi=6) -> int:
    return int(rng.integers(lo, hi + 1))


# -- cones -------------------------------------------------------------------

def _suite_cones(report: CertificationReport, rng: np.random.Generator, points_per_pattern: int = 10):
    """Disjoint cone interiors, shared surfaces and full coverage."""
    patterns_cache = {}
    surface_checked = 0
    for _ in range(report.trials):
        m = _random_dim(rng, 1, 4)
        H = random_admissible_H(rng, m)
        pats = patterns_cache.setdefault(m, enumerate_sign_patterns(m))

        # disjoint interiors: D_i p with p > 0.1 is interior to C_i only.
        # Batched form of classify_cone_membership over all patterns.
        Ds = np.stack([np.diag(q.diag) + H for q in pats])
        Dinv = np.linalg.inv(Ds)
        for i in range(len(pats)):
            Y = Ds[i] @ rng.uniform(0.1, 2.0, size=(m, points_per_pattern))
            eps = 1e-10 * (1.0 + np.abs(Y).max(axis=0))
            W = Dinv @ Y  # (patterns, m, points)
            interior = np.all(W > eps, axis=1)  # (patterns, points)
            for col in range(points_per_pattern):
                inside = np.flatnonzero(interior[:, col]).tolist()
                report.checks += 1
                if inside != [i]:
                    report.fail("disjoint_interiors", H=H, y=Y[:, col], pattern=i, interior_in=inside)
        # spot-check the batched verdict against the scalar classifier
        y = Ds[0] @ rng.uniform(0.1, 2.0, size=m)
        if classify_cone_membership(pats[0], H, y).status != "interior":
            report.fail("disjoint_interiors", H=H, y=y, pattern=0, interior_in=[])

        # coverage: some pattern accepts every right-hand side
        for _ in range(points_per_pattern):
            u_c = rng.standard_normal(m)
            report.checks += 1
            try:
                solve_control_equation(SolveInstance(H, u_c))
            except SMCError as exc:
                report.fail("coverage", H=H, u_c=u_c, error=str(exc))

        # shared surfaces: zero magnitudes accept either sign bit
        pat = pats[int(rng.integers(len(pats)))]
        p = rng.uniform(0.1, 2.0, size=m)
        zero = rng.random(m) < 0.5
        zero[int(rng.integers(m))] = True
        p[zero] = 0.0
        u_c = (np.diag(pat.diag) + H) @ p
        res = solve_control_equation(SolveInstance(H, u_c))
        if res.on_surface:
            surface_checked += 1
            eps = zero_tolerance(u_c)
            flip = np.flatnonzero(np.abs(res.magnitudes) <= eps)
            other = res.pattern.flipped(flip.tolist())
            D = np.diag(other.diag) + H
            q = np.linalg.solve(D, u_c)
            report.checks += 1
            if not (q.min() >= -eps and np.max(np.abs(other.diag * q - res.u_hat)) <= 1e-9 * (1 + np.abs(u_c).max())):
                report.fail("shared_surface", H=H, u_c=u_c, pattern=res.pattern, flipped=other)
    report.stats["surface_instances"] = surface_checked


# -- uniqueness ----------------------------------------------------------------

def _suite_uniqueness(report: CertificationReport, rng: np.random.Generator, F_bar=None):
    """Solver residual, agreement with the exhaustive oracle and uniqueness.

    With ``F_bar`` injected every instance uses ``H = S(v) F_bar`` for a
    random ``v``; otherwise ``H`` is random with infinity norm <= 0.95.
    """
    injected = F_bar is not None
    if injected:
        F_bar = np.asarray(F_bar, dtype=float)
        report.stats["injected_F_bar"] = F_bar
        report.stats["injected_norms"] = {k: induced_norm(F_bar, k) for k in ("one", "two", "infinity")}
    singular_total = 0
    for _ in range(report.trials):
        if injected:
            m = F_bar.shape[0]
            v = np.where(rng.random(m) < 0.5, -1.0, 1.0)
            H = v[:, None] * F_bar
        else:
            m = _random_dim(rng)
            H = random_admissible_H(rng, m)
        u_c = rng.standard_normal(m) * rng.uniform(0.1, 10.0)
        inst = SolveInstance(H, u_c)
        singular = []
        cands = exhaustive_solutions(inst, singular)
        singular_total += len(singular)
        distinct = distinct_controls(cands)
        report.checks += 1
        if len(distinct) != 1:
            report.fail("unique_solution", H=H, u_c=u_c, solutions=distinct)
            continue
        try:
            res = solve_control_equation(inst, check=not injected)
        except SMCError as exc:
            report.fail("solver", H=H, u_c=u_c, error=str(exc))
            continue
        scale = 1.0 + float(np.max(np.abs(u_c)))
        r = equation_residual(res.u_hat, H, u_c)
        if r > 1e-9 * scale:
            report.fail("residual", H=H, u_c=u_c, residual=r)
        elif np.max(np.abs(res.u_hat - distinct[0])) > 1e-9 * scale:
            report.fail("oracle_agreement", H=H, u_c=u_c, solver=res.u_hat, oracle=distinct[0])
    report.stats["singular_patterns_skipped"] = singular_total


# -- theorem3 -----------------------------------------------------------------

def _random_symmetric_nonnegative(rng, m, two_norm):
    A = rng.uniform(0.0, 1.0, size=(m, m))
    F = 0.5 * (A + A.T)
    return F * (two_norm / induced_norm(F, "two"))


def _suite_theorem3(report: CertificationReport, rng: np.random.Generator):
    """Non-uniqueness once the two-norm of a symmetric ``F_bar`` reaches 1."""
    verified = {str(n): 0 for n in THEOREM3_NORMS}
    for t in range(report.trials):
        target = THEOREM3_NORMS[t % len(THEOREM3_NORMS)]
        m = _random_dim(rng, 1, 5)
        F = _random_symmetric_nonnegative(rng, m, target)
        report.checks += 1
        try:
            inst = construct_nonunique_instance(F)
        except (SMCError, ArithmeticError) as exc:
            report.fail("construction", F_bar=F, error=str(exc))
            continue
        H = inst.v_signs.apply(F)
        a, b = inst.solutions
        ok = np.max(np.abs(a - b)) > 1e-9
        ok &= all(equation_residual(u, H, inst.u_c) < 1e-9 for u in inst.solutions)
        if abs(abs(inst.eigenvalue) - 1.0) > 1e-9:
            # both solutions sit in non-singular cones: the oracle must see them
            found = distinct_controls(exhaustive_solutions(SolveInstance(H, inst.u_c)))
            ok &= len(found) >= 2
        if ok:
            verified[str(target)] += 1
        else:
            report.fail("two_solutions", F_bar=F, u_c=inst.u_c, solutions=inst.solutions)
    report.stats["verified_instances"] = sum(verified.values())
    report.stats["verified_by_norm"] = verified


# -- lyapunov -----------------------------------------------------------------

def _suite_lyapunov(report: CertificationReport, rng: np.random.Generator):
    """``s' s_dot <= -rho s's`` for direct evaluations of the uncertain model."""
    worst = -np.inf
    for _ in range(report.trials):
        m = _random_dim(rng, 1, 4)
        while True:
            M = rng.standard_normal((m, m))
            Q = rng.standard_normal((m, m))
            if np.linalg.cond(M) < 1e3 and np.linalg.cond(Q) < 1e3:
                break
        F_bar = np.abs(rng.standard_normal((m, m)))
        F_bar *= rng.uniform(0.0, 0.95) / induced_norm(F_bar, "infinity")
        f_bar = rng.uniform(0.0, 2.0, m)
        eta_bar = rng.uniform(0.0, 1.0, m)
        cfg = ControllerConfig(rho=float(rng.uniform(0.1, 5.0)), f_bar=f_bar, eta_bar=eta_bar,
                               decomposition=GainDecomposition(M, Q, F_bar))
        s = rng.standard_normal(m)
        f0 = 5.0 * rng.standard_normal(m)
        df = rng.uniform(-1, 1, m) * f_bar
        eta = rng.uniform(-1, 1, m) * eta_bar
        F = rng.uniform(-1, 1, (m, m)) * F_bar
        out = compute_control(f0, s, cfg)
        s_dot = f0 + df + M @ (np.eye(m) + F) @ out.u_hat + eta
        margin = float(s @ s_dot + cfg.rho * s @ s)
        worst = max(worst, margin)
        report.checks += 1
        if margin > 1e-9:
            report.fail("lyapunov_decrease", M=M, Q=Q, F_bar=F_bar, F=F, s=s, f0=f0, margin=margin)
    report.stats["max_margin"] = worst


SUITES = {
    "cones": _suite_cones,
    "uniqueness": _suite_uniqueness,
    "theorem3": _suite_theorem3,
    "lyapunov": _suite_lyapunov,
}


def run_suite(name: str, trials: int = 1000, seed: int = 0, F_bar=None) -> CertificationReport:
    """Run one suite; ``F_bar`` is only accepted by ``uniqueness``."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if F_bar is not None and name != "uniqueness":
        raise ValueError("an injected F_bar is only supported by the uniqueness suite")
    report = CertificationReport(name, trials, seed)
    rng = np.random.default_rng(seed)
    if name == "uniqueness":
        SUITES[name](report, rng, F_bar=F_bar)
    else:
        SUITES[name](report, rng)
    return report
