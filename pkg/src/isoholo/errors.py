"""Exception hierarchy shared by all modules.

Everything raised on purpose derives from :class:`HolonomyError`.  Errors that
signal a numerical breakdown (as opposed to bad input) also derive from
:class:`NumericalError`, which the CLI maps to exit code 3.
"""


class HolonomyError(Exception):
    """Base class for errors raised by this package."""


class NumericalError(HolonomyError, ArithmeticError):
    """A computation failed for numerical reasons."""


class NotHermitian(HolonomyError, ValueError):
    pass


class NoConvergence(NumericalError):
    pass


class DimensionMismatch(HolonomyError, ValueError):
    pass


class LengthMismatch(HolonomyError, ValueError):
    pass


class ChartDomainViolation(HolonomyError, ValueError):
    pass


class NotOrthonormal(NumericalError):
    pass


class AntiHermiticityDefect(NumericalError):
    pass


class NonUnitaryGauge(NumericalError):
    pass


class NonClosure(HolonomyError, ValueError):
    pass


class ConventionMismatch(HolonomyError, ValueError):
    pass


class StepCountTooSmall(NumericalError):
    pass


class SchemaError(HolonomyError, ValueError):
    pass


class UnknownCheck(HolonomyError, KeyError):
    def __str__(self):
        return Exception.__str__(self)
