"""Exception hierarchy shared by all relu_forge modules."""


class ReluForgeError(Exception):
    """Base class for every error raised by the toolkit."""


class ArgumentError(ReluForgeError, ValueError):
    """Invalid argument value or shape."""


class InputShapeError(ArgumentError):
    """Input vector does not match the network's input dimension."""


class NumericDomainError(ReluForgeError, ArithmeticError):
    """Non-finite weight, input or target value."""


class CompositionError(ArgumentError):
    """Networks cannot be composed (dimension mismatch)."""


class CapabilityError(ReluForgeError):
    """Request exceeds a hard capability cap (e.g. bit budget, lift dimension)."""


class CapacityError(ReluForgeError):
    """Request exceeds a configurable resource budget."""


class PreconditionError(ArgumentError):
    """Input data violates a documented precondition."""


class ParseError(ReluForgeError):
    """Malformed network document or input file."""

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)


class VersionError(ParseError):
    """Network document has an unsupported format version."""
