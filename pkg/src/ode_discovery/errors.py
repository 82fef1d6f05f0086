"""Exception hierarchy shared by all stages of the discovery pipeline."""


class DiscoveryError(Exception):
    """Base class for every error raised by this package."""


class InputError(DiscoveryError, ValueError):
    """Malformed user input: data files, configuration, arguments."""


class InvalidConfig(InputError):
    pass


class NumericalError(DiscoveryError, ArithmeticError):
    """A numerical stage could not produce a usable result."""


class LeadingCoefficientZero(NumericalError):
    pass


class EigenSolveFailure(NumericalError):
    pass


class BasisOverflow(NumericalError):
    pass


class DegenerateBasis(NumericalError):
    pass


class InvalidDomain(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class OutsideDomain(InputError):
    pass


class RankDeficientFit(NumericalError):
    pass


class RefinementStalled(NumericalError):
    """Raised by strict refinement when intervals remain above tolerance."""


class RefinementStalledWarning(RuntimeWarning):
    pass


class OrderExceedsDegree(InputError):
    pass


class AllCoefficientsBelowTolerance(NumericalError):
    pass


class PivotBelowTolerance(NumericalError):
    pass


class NonPositiveConcentration(InputError):
    pass


class StageError(DiscoveryError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, error):
        super().__init__(f"stage '{stage}' failed: {type(error).__name__}: {error}")
        self.stage = stage
        self.error = error
