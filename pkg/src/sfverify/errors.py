"""Exception types raised by the numerical routines."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class RangeError(OverflowError):
    """The requested value cannot be represented in double precision."""


class EvaluationError(ArithmeticError):
    """A term, node value or partial result came out non-finite."""
