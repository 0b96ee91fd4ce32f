"""Exception types shared across the toolkit."""


class FreshqueryError(Exception):
    """Base class for all toolkit errors."""


class NonSquareError(FreshqueryError):
    """Generator matrix is not square or too small."""


class NegativeOffDiagonalError(FreshqueryError):
    """Generator matrix has a negative off-diagonal rate."""


class RowSumNonzeroError(FreshqueryError):
    """A generator row does not sum to zero."""


class ReducibleError(FreshqueryError):
    """The rate graph is not strongly connected."""


class SingularSystemError(FreshqueryError):
    """A stationary-distribution linear solve failed."""


class NumericalOverflowError(FreshqueryError):
    """Uniformization series would exceed its term budget."""


class UnsupportedPairError(FreshqueryError):
    """Convolution of the given delay kinds has no implemented closed form."""


class QuadratureError(FreshqueryError):
    """Adaptive quadrature failed to reach its tolerance."""


class DegenerateCycleError(FreshqueryError):
    """Mean query cycle length is zero, so freshness is undefined."""


class DensityUnavailableError(FreshqueryError):
    """Threshold computation requires an absolutely continuous combined delay."""


class NonStochasticRowError(FreshqueryError):
    """An SMDP transition row does not sum to one."""


class NonPositiveSojournError(FreshqueryError):
    """An SMDP sojourn time is not strictly positive."""


class NoConvergenceError(FreshqueryError):
    """Policy iteration hit its iteration cap."""


class ConfigParseError(FreshqueryError):
    """Experiment configuration is malformed."""


class MissingColumnError(FreshqueryError):
    """A CSV dataset lacks a required column."""
