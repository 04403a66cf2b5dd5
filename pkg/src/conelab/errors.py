"""Exception hierarchy shared by every conelab module."""


class ConelabError(Exception):
    """Base class for all conelab errors."""


class ArgumentError(ConelabError, ValueError):
    """Shape or dimension mismatch in an argument."""


class DomainError(ConelabError, ValueError):
    """A point lies outside the open cone / tube domain."""


class ParameterError(ConelabError, ValueError):
    """A parameter violates an admissibility condition."""


class NumericalError(ConelabError, ArithmeticError):
    """A numerical routine produced an invalid result (e.g. PSD violation)."""


class BudgetError(ConelabError, RuntimeError):
    """A numerical budget (nodes, cells, seconds) was exhausted."""


class UnsupportedBackendError(ConelabError, NotImplementedError):
    """The requested operation is only defined for another cone backend."""
