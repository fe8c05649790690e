"""Quantum Friction Lab - stability, Green's functions and friction force of sheared Drude slabs."""

__version__ = "0.1.0"

from .material import DrudeParams, ShearConfig, Side, SpectralPoint
from .stability import critical_gamma, max_growth, solve_roots
from .force import total_force

__all__ = [
    "DrudeParams",
    "ShearConfig",
    "Side",
    "SpectralPoint",
    "critical_gamma",
    "max_growth",
    "solve_roots",
    "total_force",
]
