"""Exception types shared across modules.

Input problems derive from ValueError, resource caps from BudgetError; the
command line maps the first to exit code 2 and the second to exit code 3.
"""


class BudgetError(RuntimeError):
    """A requested computation exceeds a configured size cap."""


class DomainError(ValueError):
    """An index or parameter lies outside the domain of an operation."""


class QMFError(ValueError):
    """A filter failed the QMF gate required by an operation."""


class LatticeError(ValueError):
    """Invalid dilation matrix for the requested lattice operation."""


class SingularMatrixError(LatticeError):
    pass


class NotSimilarityError(LatticeError):
    pass


class StructuralError(RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""
