"""Finite-scale laboratory for the holomorphic functional calculus of
generators of symmetric contraction semigroups."""

from .errors import ConvergenceError, DomainError

__all__ = ["ConvergenceError", "DomainError"]
__version__ = "0.1.0"
