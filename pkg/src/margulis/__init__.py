"""Numerical tools for proper affine actions of free groups on Minkowski 3-space."""

from .group import GroupSpec, example_group, fuchsian_group
from .isometry import AffIso, IsoClass, classify
from .lorentz_core import GeometryError, NumericalError, bform

__all__ = [
    "AffIso",
    "GeometryError",
    "GroupSpec",
    "IsoClass",
    "NumericalError",
    "bform",
    "classify",
    "example_group",
    "fuchsian_group",
]

__version__ = "0.1.0"
