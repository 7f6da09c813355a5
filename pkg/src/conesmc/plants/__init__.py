from .manipulator import (
    CASES,
    Manipulator,
    ManipulatorParams,
    ManipulatorState,
    manipulator_dynamics,
    manipulator_gain,
    manipulator_sliding,
    target_trajectory,
)
from .spacecraft import (
    Spacecraft,
    SpacecraftParams,
    SpacecraftState,
    sample_spacecraft_params,
    spacecraft_dynamics,
    spacecraft_gain,
    spacecraft_sliding,
)

__all__ = [
    "CASES",
    "Manipulator",
    "ManipulatorParams",
    "ManipulatorState",
    "manipulator_dynamics",
    "manipulator_gain",
    "manipulator_sliding",
    "target_trajectory",
    "Spacecraft",
    "SpacecraftParams",
    "SpacecraftState",
    "sample_spacecraft_params",
    "spacecraft_dynamics",
    "spacecraft_gain",
    "spacecraft_sliding",
]
