"""Convex bodies of revolution that float in equilibrium in every orientation.

Construction pipelines for even and odd dimensions, a zonal spherical Radon
transform, hydrostatic oracles and verification routines.
"""

from .errors import (
    ConstructionError,
    GeometryError,
    NumericalError,
    ParameterError,
    UlamError,
    VerificationError,
)
from .profile import PerturbationBump, PolarChart, ProfileBody, SlopeChart, make_bump, zero_bump

__version__ = "0.1.0"

__all__ = [
    "ConstructionError",
    "GeometryError",
    "NumericalError",
    "ParameterError",
    "PerturbationBump",
    "PolarChart",
    "ProfileBody",
    "SlopeChart",
    "UlamError",
    "VerificationError",
    "make_bump",
    "zero_bump",
    "__version__",
]
