"""Exception hierarchy shared by all homwalk modules."""


class HomwalkError(Exception):
    """Base class for every error raised by homwalk."""


class NonSquare(HomwalkError, ValueError):
    pass


class BadDeterminant(HomwalkError, ValueError):
    pass


class EmptySupport(HomwalkError, ValueError):
    pass


class NegativeWeight(HomwalkError, ValueError):
    pass


class DimensionMismatch(HomwalkError, ValueError):
    pass


class NumericalBreakdown(HomwalkError, ArithmeticError):
    pass


class SvdFailure(HomwalkError, ArithmeticError):
    pass


class DependentBasis(HomwalkError, ValueError):
    pass


class DegenerateQuotient(HomwalkError, ValueError):
    """Raised when the quotient space E = a / a' is zero-dimensional."""


class UnsupportedDimension(HomwalkError, ValueError):
    pass


class NoConvergence(HomwalkError, RuntimeError):
    pass


class NotCentered(HomwalkError, ValueError):
    """The requested direction carries a nonzero drift."""


class ConfigError(HomwalkError, ValueError):
    """Malformed measure, subgroup or matrix file."""


class NoContraction(UserWarning):
    """Boundary-point estimation did not observe contraction of flags."""


class ZariskiDensityWarning(UserWarning):
    """Heuristic evidence that the support of a measure is not Zariski-dense."""
