"""Exception hierarchy shared by the kernel and the command line.

Each class carries the process exit code the CLI maps it to.
"""


class BirkhoffError(Exception):
    exit_code = 4


class InvalidArgumentError(BirkhoffError, ValueError):
    exit_code = 2


class ParseError(InvalidArgumentError):
    """Malformed loop-spec text. ``where`` names the offending line/field."""

    def __init__(self, message, where=None):
        self.where = where
        if where:
            message = f"{where}: {message}"
        super().__init__(message)


class DomainError(BirkhoffError, ValueError):
    """Input lies outside the domain of the operation."""

    exit_code = 4


class NotInvertibleError(DomainError):
    """Loop vanishes (or is singular) somewhere on the unit circle."""

    exit_code = 3

    def __init__(self, message, margin=None):
        self.margin = margin
        super().__init__(message)


class TruncationError(BirkhoffError, ArithmeticError):
    """Band cap exceeded with more discarded l1 mass than tolerated."""

    def __init__(self, message, tail_mass=None, residual=None):
        self.tail_mass = tail_mass
        self.residual = residual
        super().__init__(message)


class NumericError(BirkhoffError, ArithmeticError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class IndexObstructionError(NumericError):
    """Canonical (all-zero index) factorization does not exist numerically."""


class InvariantViolation(BirkhoffError, AssertionError):
    exit_code = 5
