"""
conelab: Toeplitz operators on weighted Bergman spaces of tube domains.

Numerical laboratory for tube domains over the half-line and the
three-dimensional Lorentz cone: kernels, δ-lattices, Berezin transforms,
Gram-matrix Toeplitz realizations, Cesàro-type operators and the checks
that tie them together.
"""

from .cone import HALF_LINE, LORENTZ3, ConeBackend, ConeKind, GroupElement, TubePoint, get_backend
from .errors import (
    ArgumentError,
    BudgetError,
    ConelabError,
    DomainError,
    NumericalError,
    ParameterError,
    UnsupportedBackendError,
)

__version__ = "0.1.0"

__all__ = [
    "HALF_LINE",
    "LORENTZ3",
    "ConeBackend",
    "ConeKind",
    "GroupElement",
    "TubePoint",
    "get_backend",
    "ArgumentError",
    "BudgetError",
    "ConelabError",
    "DomainError",
    "NumericalError",
    "ParameterError",
    "UnsupportedBackendError",
]
