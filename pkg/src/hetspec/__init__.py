"""Heterodyne sideband spectra of a linearized optomechanical system."""

from .errors import *  # noqa: F401,F403
from .params import (
    CavityParams,
    DetectorParams,
    FieldNoise,
    LaserNoise,
    MechParams,
    SystemParams,
    ValidatedParams,
    derive_coupling,
    make_params,
    occupancy_from_temperature,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "CavityParams", "DetectorParams", "FieldNoise", "LaserNoise", "MechParams",
    "SystemParams", "ValidatedParams", "derive_coupling", "make_params",
    "occupancy_from_temperature", "validate", "__version__",
]
