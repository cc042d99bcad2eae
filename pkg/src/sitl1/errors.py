"""Exception hierarchy shared by every module in the package."""


class SitError(Exception):
    """Base class for all errors raised by :mod:`sitl1`."""


class InvalidInput(SitError, ValueError):
    """Non-finite entries, empty arrays or otherwise malformed input."""


class DimensionMismatch(InvalidInput):
    pass


class SolverFailure(SitError, RuntimeError):
    """A numerical routine failed to converge."""


class FullRank(SitError):
    """The orthogonal complement of a range is trivial."""


class InfeasibleError(SitError):
    """The constraint set of an l1 problem is empty."""


class DegenerateY(SitError):
    """``y`` already lies in ``span(A)``; the zero error vector is optimal."""


class DegenerateSample(SitError):
    """A Monte Carlo sample cannot be rescaled back to original magnitudes."""


class AllSamplesDegenerate(SitError):
    pass


class RankDeficientComplement(SitError):
    """The rows outside a support do not determine ``x`` uniquely."""


class GramSchmidtBreakdown(SitError):
    pass


class InfeasibleInput(SitError):
    """``y_tilde`` is not in the range of the under-determined operator."""


class EnumerationTooLarge(SitError):
    """The exact l0 enumeration would exceed its subset cap."""


class ConfigError(SitError, ValueError):
    pass
