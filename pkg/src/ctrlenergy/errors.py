"""Exception hierarchy.

Input/usage problems derive from :class:`InputError`; failures of the
numerics (instability, singularity, exhausted random retries) derive from
:class:`NumericalError`.  The CLI maps the two families to exit codes 2 and 3.
"""


class CtrlEnergyError(Exception):
    """Base class for all package errors."""


class InputError(CtrlEnergyError, ValueError):
    """Malformed input or violated precondition."""


class DimensionError(InputError):
    pass


class SymmetryError(InputError):
    pass


class EnumerationSizeError(InputError):
    pass


class PreconditionError(InputError):
    pass


class ConventionError(InputError):
    """A set function term required to be finite is infinite."""

    def __init__(self, message, offending_set=None):
        super().__init__(message)
        self.offending_set = offending_set


class NumericalError(CtrlEnergyError, ArithmeticError):
    """Numerical failure (as opposed to bad input)."""


class NotPSDError(NumericalError):
    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class StabilityError(NumericalError):
    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class SingularMatrixError(NumericalError):
    pass


class RandomnessError(NumericalError):
    pass


class ConsistencyError(NumericalError):
    """An internal cross-check failed where theory says it cannot."""
