"""Instability timescales of superposed gravitational potentials."""

from .constants import CODATA2018, PhysicalConstants
from .errors import INFINITE, NO_HORIZON, NO_SOLUTION, Unbounded

__version__ = "0.1.0"

__all__ = ["CODATA2018", "PhysicalConstants", "INFINITE", "NO_HORIZON", "NO_SOLUTION", "Unbounded"]
