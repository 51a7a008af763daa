"""Numerical construction and verification of Chen-Gackstatter-type minimal tori in R^4."""

from . import elliptic, quadrature, solver, surface, wdata
from .errors import DomainError, LorentzCGError, NumericError

__all__ = ["elliptic", "quadrature", "solver", "surface", "wdata",
           "DomainError", "LorentzCGError", "NumericError"]
__version__ = "0.1.0"
