"""Upper bound matrices from sampled gain uncertainty and PSO decomposition search.

Given samples ``G_k`` of the control gain, the nominal gain ``G0`` is their
element-wise median (or midrange) and ``dG_k = G_k - G0``. For a factorisation
``G0 = M Q`` the normalised uncertainty is ``F_k = M^-1 dG_k Q^-1`` and the
tightest bound certified by the samples is ``F_bar = max_k |F_k|``.

Because ``Q`` is derived as ``M^-1 G0``, ``F_k = M^-1 (dG_k G0^-1) M`` is a
similarity transform of the relative uncertainty: the search only moves the
off-diagonal mass of ``F_bar`` around, and ``max_k rho(dG_k G0^-1)`` is a
floor no decomposition can beat.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .controller import GainDecomposition
from .errors import AllParticlesInfeasible, DecompositionMismatch, DimensionError, SingularFactor
from .plants.manipulator import ManipulatorParams, manipulator_gain
from .plants.spacecraft import UNCERTAIN as SC_UNCERTAIN, SpacecraftParams, spacecraft_gain
from .sign_algebra import NORM_KINDS, induced_norm

log = logging.getLogger(__name__)

__all__ = [
    "UncertaintySampleSet",
    "PsoSettings",
    "DecompositionResult",
    "NOMINAL_METHODS",
    "nominal_gain",
    "ubm_from_samples",
    "pso_search",
    "spacecraft_sample_set",
    "manipulator_sample_set",
    "relative_ubm",
    "norms_of",
]

_COND_LIMIT = 1e6


@dataclass(frozen=True)
class UncertaintySampleSet:
    G0: np.ndarray
    deltas: tuple
    provenance: str = ""

    def __post_init__(self):
        G0 = np.array(self.G0, dtype=float, ndmin=2)
        if G0.ndim != 2 or G0.shape[0] != G0.shape[1]:
            raise DimensionError("G0 must be square")
        deltas = np.array(self.deltas, dtype=float)
        if deltas.ndim == 2:
            deltas = deltas[None]
        if deltas.size == 0:
            raise ValueError("sample set must contain at least one delta")
        if deltas.shape[1:] != G0.shape:
            raise DimensionError(f"deltas must be {G0.shape}, got {deltas.shape[1:]}")
        if not (np.all(np.isfinite(G0)) and np.all(np.isfinite(deltas))):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "G0", G0)
        object.__setattr__(self, "deltas", deltas)

    @classmethod
    def from_gains(cls, gains, provenance: str = "", nominal: str = "median") -> "UncertaintySampleSet":
        gains = np.asarray(gains, dtype=float)
        G0 = nominal_gain(gains, nominal)
        return cls(G0, gains - G0, provenance)

    @property
    def m(self) -> int:
        return self.G0.shape[0]

    def __len__(self):
        return self.deltas.shape[0]

    def relative(self) -> np.ndarray:
        """``dG_k G0^-1`` for every sample."""
        return self.deltas @ np.linalg.inv(self.G0)


@dataclass(frozen=True)
class PsoSettings:
    swarm_size: int = 50
    iterations: int = 200
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    bound: float | None = None  # half-width of the box on M entries; None -> 10 max|G0|
    seed: int = 0

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 < self.inertia < 1:
            raise ValueError("inertia must lie in (0, 1)")
        if self.cognitive < 0 or self.social < 0:
            raise ValueError("acceleration coefficients must be nonnegative")
        if self.bound is not None and not self.bound > 0:
            raise ValueError("bound must be positive")


@dataclass(frozen=True)
class DecompositionResult:
    decomposition: GainDecomposition
    fitness_trace: np.ndarray
    trivial_fitness: dict
    provenance: str = ""
    settings: PsoSettings = field(default_factory=PsoSettings)

    @property
    def fitness(self) -> float:
        return float(self.fitness_trace[-1])

    def report(self) -> dict:
        d = self.decomposition
        return {
            "M": d.M.tolist(),
            "Q": d.Q.tolist(),
            "F_bar": d.F_bar.tolist(),
            "norms": dict(d.norms),
            "G0": d.G0.tolist(),
            "provenance": self.provenance,
            "trivial_decompositions": dict(self.trivial_fitness),
            "pso": {
                "swarm_size": self.settings.swarm_size,
                "iterations": self.settings.iterations,
                "inertia": self.settings.inertia,
                "cognitive": self.settings.cognitive,
                "social": self.settings.social,
                "seed": self.settings.seed,
            },
            "fitness_trace": self.fitness_trace.tolist(),
        }


NOMINAL_METHODS = ("median", "midrange")


def nominal_gain(gain_samples, method: str = "median") -> np.ndarray:
    """Element-wise centre of the gain samples.

    ``"median"`` takes the element-wise median (mean of the middle pair for
    even counts); ``"midrange"`` takes the midpoint of each element's range,
    which minimises the largest element-wise deviation.
    """
    G = np.asarray(gain_samples, dtype=float)
    if G.size == 0 or G.ndim != 3:
        raise ValueError("need a non-empty list of equally shaped matrices")
    if method == "median":
        return np.median(G, axis=0)
    if method == "midrange":
        return 0.5 * (G.max(axis=0) + G.min(axis=0))
    raise ValueError(f"unknown nominal method {method!r}; expected one of {NOMINAL_METHODS}")


def ubm_from_samples(M, Q, samples: UncertaintySampleSet, rtol: float = 1e-8) -> np.ndarray:
    """Tightest element-wise bound on ``|M^-1 dG Q^-1|`` over the samples."""
    M = np.asarray(M, dtype=float)
    Q = np.asarray(Q, dtype=float)
    for name, A in (("M", M), ("Q", Q)):
        if not np.linalg.cond(A) < 1e12:
            raise SingularFactor(f"{name} is singular")
    G0 = samples.G0
    if np.max(np.abs(M @ Q - G0)) > rtol * max(np.max(np.abs(G0)), 1e-300):
        raise DecompositionMismatch("M @ Q differs from G0")
    F = np.linalg.inv(M) @ samples.deltas @ np.linalg.inv(Q)
    return np.abs(F).max(axis=0)


def _fitness(Ms: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Two-norm of ``max_k |M^-1 E_k M|`` for a batch of candidate ``M``."""
    out = np.full(Ms.shape[0], np.inf)
    cond = np.linalg.cond(Ms)
    ok = np.isfinite(cond) & (cond < _COND_LIMIT)
    if not np.any(ok):
        return out
    Mo = Ms[ok]
    F = np.einsum("pij,kjl,plm->pkim", np.linalg.inv(Mo), E, Mo)
    Fbar = np.abs(F).max(axis=1)
    out[ok] = np.linalg.norm(Fbar, ord=2, axis=(1, 2))
    return out


def _balanced(M: np.ndarray, G0: np.ndarray):
    Q = np.linalg.solve(M, G0)
    c = np.sqrt(np.linalg.norm(Q) / np.linalg.norm(M))
    return M * c, Q / c


def pso_search(samples: UncertaintySampleSet, settings: PsoSettings | None = None) -> DecompositionResult:
    """Particle swarm search for ``M`` minimising the two-norm of ``F_bar``.

    Each particle holds the ``m*m`` entries of ``M``; ``Q = M^-1 G0`` keeps
    ``G0 = M Q`` exact. Ill-conditioned ``M`` (condition number above 1e6)
    scores ``+inf``. The trivial factorisations ``(G0, I)`` and ``(I, G0)``
    are planted in the initial swarm, so the result is never worse than
    either.
    """
    settings = PsoSettings() if settings is None else settings
    m = samples.m
    if m > 8:
        raise DimensionError("pso_search supports m <= 8")
    G0 = samples.G0
    if not np.linalg.cond(G0) < _COND_LIMIT:
        raise SingularFactor("nominal gain G0 is singular")
    E = samples.relative()
    bound = settings.bound if settings.bound is not None else 10.0 * np.max(np.abs(G0))
    rng = np.random.default_rng(settings.seed)
    n, dim = settings.swarm_size, m * m

    trivial = {"M=G0,Q=I": G0, "M=I,Q=G0": np.eye(m)}
    trivial_fit = {k: float(_fitness(T[None], E)[0]) for k, T in trivial.items()}

    X = rng.uniform(-bound, bound, size=(n, dim))
    V = rng.uniform(-0.1 * bound, 0.1 * bound, size=(n, dim))
    for i, T in enumerate(trivial.values()):
        X[i] = (T * (0.5 * bound / np.max(np.abs(T)))).ravel()

    fit = _fitness(X.reshape(n, m, m), E)
    if not np.any(np.isfinite(fit)):
        raise AllParticlesInfeasible("every initial particle has an ill-conditioned M")
    pbest, pfit = X.copy(), fit.copy()
    g = int(np.argmin(pfit))
    gbest, gfit = pbest[g].copy(), float(pfit[g])
    trace = [gfit]

    for _ in range(settings.iterations):
        r1 = rng.random((n, dim))
        r2 = rng.random((n, dim))
        V = (settings.inertia * V + settings.cognitive * r1 * (pbest - X)
             + settings.social * r2 * (gbest - X))
        X = X + V
        out = np.abs(X) > bound
        X = np.clip(X, -bound, bound)
        V[out] = 0.0
        fit = _fitness(X.reshape(n, m, m), E)
        better = fit < pfit
        pbest[better] = X[better]
        pfit[better] = fit[better]
        g = int(np.argmin(pfit))
        if pfit[g] < gfit:
            gbest, gfit = pbest[g].copy(), float(pfit[g])
        trace.append(gfit)

    M, Q = _balanced(gbest.reshape(m, m), G0)
    F_bar = ubm_from_samples(M, Q, samples)
    log.info("pso best ||F_bar||_2 = %.6f (trivial: %s)", gfit, trivial_fit)
    return DecompositionResult(
        decomposition=GainDecomposition(M, Q, F_bar),
        fitness_trace=np.array(trace),
        trivial_fitness=trivial_fit,
        provenance=samples.provenance,
        settings=settings,
    )


def _corner_and_interior_draws(n_params: int, n_draws: int, seed: int) -> np.ndarray:
    """Unit-box points in ``[-1, 1]^r``: all corners, then uniform draws."""
    corners = np.array(list(itertools.product((-1.0, 1.0), repeat=n_params)))
    rng = np.random.default_rng(seed)
    return np.vstack([corners, rng.uniform(-1.0, 1.0, size=(n_draws, n_params))])


def spacecraft_sample_set(nominal: SpacecraftParams | None = None, *, psi_grid=None,
                          n_draws: int = 200, seed: int = 0,
                          nominal_method: str = "median") -> UncertaintySampleSet:
    """Gain samples over the parameter box ``nominal * (1 + k [-bound, bound])``."""
    nominal = SpacecraftParams() if nominal is None else nominal
    psi_grid = np.deg2rad([-5.0, -2.5, 0.0, 2.5, 5.0]) if psi_grid is None else np.asarray(psi_grid)
    unit = _corner_and_interior_draws(len(SC_UNCERTAIN), n_draws, seed)
    gains = []
    for row in unit:
        p = nominal.scaled(**{n: nominal.bounds[n] * z for n, z in zip(SC_UNCERTAIN, row)})
        gains.extend(spacecraft_gain(p, psi) for psi in psi_grid)
    provenance = (f"spacecraft k={nominal.k:g}: {2 ** len(SC_UNCERTAIN)} corners + {n_draws} "
                  f"uniform draws (seed {seed}) x psi grid {np.round(np.rad2deg(psi_grid), 4).tolist()} deg; "
                  f"finite sample, not a worst case over the continuous box; G0 = element-wise {nominal_method}")
    return UncertaintySampleSet.from_gains(gains, provenance, nominal_method)


def manipulator_sample_set(ranges=None, *, phi_grid=None, n_draws: int = 200,
                           seed: int = 0, g: float = 9.81,
                           nominal_method: str = "median") -> UncertaintySampleSet:
    """Gain samples over the link mass/length ranges and a grid of ``q1 - q2``."""
    base = ManipulatorParams.midpoint(ranges, g=g)
    names = tuple(base.ranges)
    phi_grid = np.array([-0.02, 0.0, 0.02]) if phi_grid is None else np.asarray(phi_grid)
    unit = _corner_and_interior_draws(len(names), n_draws, seed)
    gains = []
    for row in unit:
        vals = {}
        for n, z in zip(names, row):
            lo, hi = base.ranges[n]
            vals[n] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * z
        p = base.with_values(**vals)
        gains.extend(manipulator_gain(p, phi) for phi in phi_grid)
    provenance = (f"manipulator ranges {dict(base.ranges)}: {2 ** len(names)} corners + {n_draws} "
                  f"uniform draws (seed {seed}) x (q1 - q2) grid {phi_grid.tolist()} rad; "
                  f"finite sample, not a worst case over the continuous box; G0 = element-wise {nominal_method}")
    return UncertaintySampleSet.from_gains(gains, provenance, nominal_method)


def relative_ubm(gains, G0) -> np.ndarray:
    """Element-wise bound ``max_k |(G_k - G0) G0^-1|`` of the relative gain error.

    This is the quantity that the element-wise ``< 1/m`` sufficient
    condition is stated on.
    """
    G0 = np.asarray(G0, dtype=float)
    gains = np.asarray(gains, dtype=float)
    return np.abs((gains - G0) @ np.linalg.inv(G0)).max(axis=0)


def norms_of(F_bar) -> dict:
    return {kind: induced_norm(F_bar, kind) for kind in NORM_KINDS}
