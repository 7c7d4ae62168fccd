"""Numerical laboratory for compressible Euler flow estimates.

Implements the ideal-gas Euler systems (complete and isentropic) on periodic
domains together with the quantitative machinery their stability theory
rests on: Besov semi-norm measurement, mollification commutator decay,
relative-entropy coercivity, one-sided Lipschitz constants, and a Gronwall
growth monitor between discrete solutions.
"""

__version__ = "0.1.0"

from .errors import DomainError, RangeError, ResolutionError
from .grid import PeriodicGrid, ScalarField, VectorField
from .thermo import GasParams

__all__ = [
    "DomainError",
    "RangeError",
    "ResolutionError",
    "GasParams",
    "PeriodicGrid",
    "ScalarField",
    "VectorField",
    "__version__",
]
