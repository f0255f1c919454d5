"""Polarization image pipeline: Stokes signal processing, sensor-aware
augmentation, toy scene generation, normal-map metrics, and file I/O.

Submodules are imported explicitly (``from polarshape import stokes``);
only the core Stokes types are re-exported here.
"""

from .errors import (
    ConfigError,
    EvaluationError,
    FormatError,
    PolarPipelineError,
    StructuralError,
)
from .stokes import QuadPolarImage, StokesImage

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EvaluationError",
    "FormatError",
    "PolarPipelineError",
    "StructuralError",
    "QuadPolarImage",
    "StokesImage",
    "__version__",
]
