"""Experiment configuration: schema validation and object construction.

Configurations are JSON documents checked against
``schema/experiment.schema.json`` before anything is built. Errors carry the
dotted path of the offending field (``controller.rho``, ``sim.dt``, ...).
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .controller import ControllerConfig, GainDecomposition
from .decomposition import PsoSettings, manipulator_sample_set, relative_ubm, spacecraft_sample_set
from .errors import SMCError
from .plants.manipulator import (
    DEFAULT_RANGES,
    Manipulator,
    ManipulatorParams,
    manipulator_gain,
    target_trajectory,
)
from .plants.spacecraft import Spacecraft, SpacecraftParams, sample_spacecraft_params
from .simulator import AUDIT_C, SimSettings

__all__ = [
    "ConfigError",
    "Experiment",
    "bundled_configs",
    "load_config",
    "validate_config",
    "config_hash",
    "build_experiment",
    "build_sample_set",
    "build_pso_settings",
    "manipulator_case_condition",
]

DEFAULT_BOUNDARY = 1e-3


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


def _schema() -> dict:
    text = resources.files("conesmc").joinpath("schema/experiment.schema.json").read_text()
    return json.loads(text)


def bundled_configs() -> dict[str, str]:
    """Names of the configs shipped with the package mapped to their text."""
    root = resources.files("conesmc").joinpath("configs")
    return {p.name[:-5]: p.read_text() for p in root.iterdir() if p.name.endswith(".json")}


def _field_path(err: jsonschema.ValidationError) -> str:
    path = list(err.absolute_path)
    if err.validator == "required":
        # report the missing key itself, not its parent
        missing = err.message.split("'")[1] if "'" in err.message else ""
        path.append(missing)
    elif err.validator == "additionalProperties" and "'" in err.message:
        path.append(err.message.split("'")[1])
    return ".".join(str(p) for p in path)


def _deepest(err: jsonschema.ValidationError) -> jsonschema.ValidationError:
    # if/then branches wrap the useful error; descend to the most specific one
    while err.context:
        err = max(err.context, key=lambda e: len(e.absolute_path))
    return err


def validate_config(cfg: dict) -> dict:
    """Schema and cross-field checks. Returns ``cfg`` unchanged."""
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = _deepest(errors[0])
        raise ConfigError(_field_path(err), err.message)

    ctrl = cfg["controller"]
    shapes = {}
    for name in ("M", "Q", "F_bar"):
        rows = ctrl[name]
        if any(len(r) != len(rows) for r in rows):
            raise ConfigError(f"controller.{name}", "matrix must be square")
        shapes[name] = len(rows)
    m = shapes["M"]
    for name, size in shapes.items():
        if size != m:
            raise ConfigError(f"controller.{name}", f"expected {m}x{m} to match controller.M")
    if m != 2:
        raise ConfigError("controller.M", "both plants have two control inputs; expected 2x2")
    if any(x < 0 for row in ctrl["F_bar"] for x in row):
        raise ConfigError("controller.F_bar", "upper bound matrix must be element-wise nonnegative")
    for name in ("f_bar", "eta_bar"):
        if name in ctrl and len(ctrl[name]) != m:
            raise ConfigError(f"controller.{name}", f"expected length {m}")

    kind = cfg["plant"]["kind"]
    sliding = cfg["sliding"]
    need = ("lambda1", "lambda2") if kind == "spacecraft" else ("alpha",)
    for key in need:
        if key not in sliding:
            raise ConfigError(f"sliding.{key}", f"required for a {kind} plant")
    for key in set(sliding) - set(need):
        raise ConfigError(f"sliding.{key}", f"not used by a {kind} plant")

    if kind == "spacecraft":
        k = cfg["plant"].get("k", 1.0)
        for name, bnd in cfg["plant"].get("bounds", {}).items():
            if k * bnd >= 1:
                raise ConfigError(f"plant.bounds.{name}", f"k * bound = {k * bnd:g} must stay below 1")
    else:
        for name, (lo, hi) in cfg["plant"].get("ranges", {}).items():
            if lo > hi:
                raise ConfigError(f"plant.ranges.{name}", "lower end exceeds upper end")

    sim = cfg["sim"]
    if sim.get("horizon", 20.0) < sim.get("dt", 1e-3):
        raise ConfigError("sim.horizon", "must be at least one step")
    return cfg


def load_config(source) -> tuple[dict, str]:
    """Load and validate a config from a path or a bundled config name.

    Returns ``(config, name)``.
    """
    path = Path(source)
    if path.exists():
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"{path} is not valid JSON: {exc}") from exc
        name = path.stem
    else:
        bundled = bundled_configs()
        key = path.stem if path.suffix == ".json" else str(source)
        if key not in bundled:
            raise ConfigError("", f"no config file {source!r} and no bundled config of that name "
                                  f"(bundled: {sorted(bundled)})")
        cfg = json.loads(bundled[key])
        name = key
    if not isinstance(cfg, dict):
        raise ConfigError("", "top level must be an object")
    return validate_config(cfg), cfg.get("name", name)


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class Experiment:
    plant: object
    controller: ControllerConfig
    sim: SimSettings
    bands: dict
    tail_fraction: float
    audit_boundary: float
    audit_c: float


def _spacecraft_nominal(plant: dict) -> SpacecraftParams:
    base = SpacecraftParams()
    kwargs = dict(plant.get("nominal", {}))
    if "bounds" in plant:
        kwargs["bounds"] = dict(plant["bounds"])
    kwargs["k"] = float(plant.get("k", 1.0))
    try:
        return SpacecraftParams(**{**base.__dict__, **kwargs})
    except SMCError as exc:
        raise ConfigError("plant.k", str(exc)) from exc


def _manipulator_nominal(plant: dict) -> ManipulatorParams:
    ranges = {k: tuple(v) for k, v in plant.get("ranges", DEFAULT_RANGES).items()}
    return ManipulatorParams.midpoint(ranges, g=float(plant.get("g", 9.81)))


def build_experiment(cfg: dict, seed: int | None = None) -> Experiment:
    """Plant, controller and simulation settings described by ``cfg``.

    ``seed`` overrides ``sim.seed``; for the spacecraft it selects the real
    parameter draw inside the uncertainty box.
    """
    cfg = copy.deepcopy(cfg)
    sim_cfg = cfg["sim"]
    if seed is not None:
        sim_cfg["seed"] = int(seed)
    seed = int(sim_cfg.get("seed", 0))
    plant_cfg = cfg["plant"]
    sliding = cfg["sliding"]

    if plant_cfg["kind"] == "spacecraft":
        nominal = _spacecraft_nominal(plant_cfg)
        true = sample_spacecraft_params(nominal, nominal.k, seed)
        plant = Spacecraft(nominal, true, lambda1=sliding["lambda1"], lambda2=sliding["lambda2"],
                           x0=plant_cfg.get("initial_state"), hold_vx=plant_cfg.get("hold_vx", False))
        bands = {"theta": math.radians(0.1), "psi": math.radians(0.1), "v_z": 1.0}
    else:
        nominal = _manipulator_nominal(plant_cfg)
        true = ManipulatorParams.case(int(plant_cfg["case"]), g=nominal.g).with_values(ranges=nominal.ranges)
        tgt = plant_cfg.get("target", {})

        def target(t, _a=tgt.get("amplitude", 0.01), _w=tgt.get("omega", 5.0),
                   _p=tgt.get("phase", math.pi / 2)):
            return target_trajectory(t, _a, _w, _p)

        plant = Manipulator(nominal, true, alpha=sliding["alpha"],
                            x0=plant_cfg.get("initial_state"), target=target)
        bands = {"e1": 1e-3, "e2": 1e-3}

    ctrl = cfg["controller"]
    m = len(ctrl["M"])
    try:
        dec = GainDecomposition(np.array(ctrl["M"], dtype=float), np.array(ctrl["Q"], dtype=float),
                                np.array(ctrl["F_bar"], dtype=float))
    except SMCError as exc:
        raise ConfigError("controller.M", str(exc)) from exc
    controller = ControllerConfig(
        rho=ctrl["rho"],
        f_bar=np.array(ctrl["f_bar"], dtype=float),
        eta_bar=np.array(ctrl.get("eta_bar", [0.0] * m), dtype=float),
        decomposition=dec,
        delta_s=ctrl.get("delta_s", 1e-3),
        delta_v=ctrl.get("delta_v", 1e-3),
        smoothing=ctrl.get("smoothing", False),
    )
    sim = SimSettings(dt=sim_cfg.get("dt", 1e-3), horizon=sim_cfg.get("horizon", 20.0), seed=seed,
                      smoothing=sim_cfg.get("smoothing"), lyapunov_audit=sim_cfg.get("lyapunov_audit", True))
    metrics = cfg.get("metrics", {})
    bands.update(metrics.get("bands", {}))
    return Experiment(
        plant=plant, controller=controller, sim=sim, bands=bands,
        tail_fraction=metrics.get("tail_fraction", 0.25),
        audit_boundary=sim_cfg.get("audit_boundary", DEFAULT_BOUNDARY),
        audit_c=sim_cfg.get("audit_c", AUDIT_C),
    )


def build_sample_set(cfg: dict):
    """Gain-uncertainty sample set for the plant box described by ``cfg``."""
    plant = cfg["plant"]
    dcfg = cfg.get("decomposition", {})
    kwargs = {
        "n_draws": dcfg.get("n_draws", 200),
        "seed": dcfg.get("seed", 0),
        "nominal_method": dcfg.get("nominal_method", "median"),
    }
    grid = dcfg.get("state_grid")
    if plant["kind"] == "spacecraft":
        return spacecraft_sample_set(_spacecraft_nominal(plant),
                                     psi_grid=None if grid is None else np.asarray(grid), **kwargs)
    nominal = _manipulator_nominal(plant)
    return manipulator_sample_set(nominal.ranges, g=nominal.g,
                                  phi_grid=None if grid is None else np.asarray(grid), **kwargs)


def build_pso_settings(cfg: dict, seed: int | None = None) -> PsoSettings:
    pso = dict(cfg.get("decomposition", {}).get("pso", {}))
    if seed is not None:
        pso["seed"] = int(seed)
    return PsoSettings(**pso)


def manipulator_case_condition(cfg: dict) -> dict:
    """Element-wise ``< 1/m`` test for the configured manipulator case.

    The nominal gain comes from the sample set of ``cfg``; the relative
    error bound is taken over the real case parameters on the state grid.
    """
    if cfg["plant"]["kind"] != "manipulator":
        raise ValueError("only defined for manipulator configs")
    samples = build_sample_set(cfg)
    nominal = _manipulator_nominal(cfg["plant"])
    case = ManipulatorParams.case(int(cfg["plant"]["case"]), g=nominal.g)
    grid = cfg.get("decomposition", {}).get("state_grid", [-0.02, 0.0, 0.02])
    U = relative_ubm([manipulator_gain(case, phi) for phi in grid], samples.G0)
    m = U.shape[0]
    return {
        "relative_ubm": U.tolist(),
        "max_element": float(U.max()),
        "below_1_over_m": bool(U.max() < 1.0 / m),
        "G0": samples.G0.tolist(),
        "state_grid": list(grid),
    }
