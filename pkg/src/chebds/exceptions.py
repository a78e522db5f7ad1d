"""Exception types shared across the package.

The CLI maps :class:`InputError` and :class:`NumericalError` onto distinct
exit codes, so library code should raise one of these rather than a bare
``ValueError`` whenever the distinction matters to a caller.
"""


class ChebDSError(Exception):
    """Base class for all package errors."""


class InputError(ChebDSError, ValueError):
    """Malformed or out-of-range input (bad files, shapes, parameters)."""


class NumericalError(ChebDSError, ArithmeticError):
    """A numerical procedure could not deliver its contract."""


class EigenvalueShortfallError(NumericalError):
    """Too few repeating eigenvalues under the bound for the requested dimension.

    Raised by :func:`chebds.spectral.repeating_eigenvalues`; increasing the
    number of graph copies fixes it.
    """

    def __init__(self, message, found, needed):
        super().__init__(message)
        self.found = found
        self.needed = needed


class InversionError(NumericalError):
    """Fixed-point inversion of a deformation did not reach its tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual
