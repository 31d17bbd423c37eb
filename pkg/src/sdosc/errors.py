"""Exception types shared across the package."""


class SdoscError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SdoscError, ValueError):
    """Input lies outside the parameter region where the model is defined."""


class NonFiniteError(SdoscError, ArithmeticError):
    """A NaN or infinity showed up in an input or in the state."""


class NumericalError(SdoscError, RuntimeError):
    """Generic numerical failure (CLI exit code 4)."""


class StepSizeUnderflow(NumericalError):
    pass


class BracketError(NumericalError):
    """Event or root function has no sign change on the given bracket."""


class RootNotBracketed(BracketError):
    pass


class QuadratureFailure(NumericalError):
    pass


class ScanInsufficient(NumericalError):
    """Roots of a scanned function collide at the grid resolution."""


class OutOfCoverage(DomainError):
    """Query point lies outside the a-range covered by a diagram slice."""
