"""Exception hierarchy shared by all modules."""


class LopError(Exception):
    """Base class for errors raised by this package."""


class DataError(LopError, ValueError):
    """Input data is malformed or violates a precondition."""


class DegenerateCoreError(LopError, ValueError):
    """A core does not span a subspace of the required dimension."""


class IntervalError(LopError, ValueError):
    """The admissible range for ``k`` is empty or ``k`` lies outside it."""


class NumericError(LopError, ArithmeticError):
    """A numerical procedure failed (e.g. exhausted ridge escalation)."""
