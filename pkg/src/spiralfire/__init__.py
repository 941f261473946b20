"""Spiral barriers against an expanding fire: series, zeros, geometry and bounds."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .errors import (
    InvalidParameterError,
    MalformedScheduleError,
    NoComplexDominantPairError,
    NumericalError,
    ParameterOverflowError,
    PrecisionOverflowError,
    SpiralFireError,
    StepTooCoarseError,
    TangentConstructionError,
)
from .params import ModelParams, critical_angle_and_speed, derive_params, params_from_alpha

__all__ = [
    "InvalidParameterError",
    "MalformedScheduleError",
    "ModelParams",
    "NoComplexDominantPairError",
    "NumericalError",
    "ParameterOverflowError",
    "PrecisionOverflowError",
    "SpiralFireError",
    "StepTooCoarseError",
    "TangentConstructionError",
    "critical_angle_and_speed",
    "derive_params",
    "params_from_alpha",
]
