"""Dynamics and parameter space of f_a(z) = z^(d-1) (z + d a/(d-1))."""

from .angles import Angle
from .family import FamilyContext, critical_value, evaluate

__version__ = "0.1.0"

__all__ = ["Angle", "FamilyContext", "critical_value", "evaluate", "__version__"]
