"""Exception hierarchy shared by all modules."""


class BesovkitError(Exception):
    """Base class for all library errors."""

    kind = "error"


class InvalidArgument(BesovkitError, ValueError):
    kind = "invalid-argument"


class DegenerateInput(BesovkitError, ValueError):
    kind = "degenerate-input"


class InvalidMultiplier(BesovkitError, ValueError):
    kind = "invalid-multiplier"


class InvalidKernel(BesovkitError, ValueError):
    kind = "invalid-kernel"


class ResolutionTooSmall(BesovkitError, ValueError):
    kind = "resolution-too-small"


class NumericalFailure(BesovkitError, ArithmeticError):
    """Base class for failures of a numerical procedure."""

    kind = "numerical-failure"


class QuadratureFailure(NumericalFailure):
    kind = "quadrature-failure"


class InternalInconsistency(NumericalFailure):
    kind = "internal-inconsistency"


class ConvergenceFailure(NumericalFailure):
    kind = "convergence-failure"


class TruncationFailure(NumericalFailure):
    kind = "truncation-failure"
