"""Numerics for weighted Bergman kernels on C^2 and matrix Schroedinger operators."""

from .errors import BergkernError, ConfigInvalid
from .newton_diagram import MonomialSet, derive_profile

__all__ = ["BergkernError", "ConfigInvalid", "MonomialSet", "derive_profile"]
__version__ = "0.1.0"
