"""Frequency-domain spatial active noise control with kernel-interpolated reference signals."""

__version__ = "0.1.0"

from .control import ControlState, StepParams
from .experiment import ExperimentConfig, run
from .kernel import KernelParams
from .scene import SceneConfig, Wavenumber, build_scene_paper

__all__ = [
    "ControlState",
    "ExperimentConfig",
    "KernelParams",
    "SceneConfig",
    "StepParams",
    "Wavenumber",
    "build_scene_paper",
    "run",
]
