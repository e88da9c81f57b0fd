"""Exception hierarchy shared by all modules."""


class OrliczError(Exception):
    """Base class for every error raised by the toolkit."""


class BracketFailure(OrliczError):
    """No finite maximizer bracket for a Legendre transform (sub-linear growth)."""


class DegenerateRatio(OrliczError):
    """An N-function vanished at a positive grid point."""


class NotEligible(OrliczError):
    """Hypotheses of the (MF) triple recipe are violated."""


class NonConvergent(OrliczError):
    """Adaptive quadrature failed to meet its error budget."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class OutOfDomain(OrliczError, ValueError):
    pass


class NotInSpace(OrliczError):
    """No finite Luxemburg scale brings the modular below one."""


class DivisionByZero(OrliczError, ZeroDivisionError):
    """A Hardy right-hand side vanished while the left-hand side did not."""


class MissingFit(OrliczError):
    pass


class NotNFunctions(OrliczError):
    pass


class Degenerate(OrliczError):
    pass


class BadParams(OrliczError, ValueError):
    pass


class ConfigError(OrliczError, ValueError):
    pass


class AssertionFailure(OrliczError):
    """A campaign row violated the inequality under test."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
