"""Exception hierarchy shared by all modules."""


class FbsigError(Exception):
    """Base class for all package errors."""


class DivisionBySingular(FbsigError):
    """Division by a value whose constant term is (numerically) zero."""


class DomainError(FbsigError):
    """Elementary function applied outside its domain (log of <= 0, ...)."""


class OrderExceeded(FbsigError):
    """A derivative of order higher than the stored truncation was requested."""


class ExpressionSyntaxError(FbsigError):
    """Malformed expression text. `offset` is the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__("%s (at offset %d)" % (message, offset))
        self.offset = offset


class UnknownIdentifier(ExpressionSyntaxError):
    """Identifier outside the allowed variable set and function names."""

    def __init__(self, name, offset):
        ExpressionSyntaxError.__init__(self, "unknown identifier '%s'" % name, offset)
        self.name = name


class ArityError(ExpressionSyntaxError):
    """Function called with the wrong number of arguments."""


class NonRegular(FbsigError):
    """Jet fails a regularity condition. `flag` names the failing test."""

    def __init__(self, flag, magnitude=None):
        msg = "non-regular jet: %s" % flag
        if magnitude is not None:
            msg += " (scaled magnitude %.3e)" % magnitude
        super().__init__(msg)
        self.flag = flag
        self.magnitude = magnitude


class SingularTransform(FbsigError):
    """Feedback map has a (numerically) singular prolonged Jacobian."""


class RelationViolation(FbsigError):
    """A structural zero of the commutation relations failed its tolerance."""


class EmptyCloud(FbsigError):
    """No grid point of the sampled domain passed the regularity tests."""


class TooFewSamples(FbsigError):
    """Not enough signature samples for a dimension estimate."""


class DependentBasis(FbsigError):
    """Gradients of the chosen invariant basis are (numerically) dependent."""


class ConfigError(FbsigError):
    """Malformed run configuration (missing names, bad tolerances, ...)."""
