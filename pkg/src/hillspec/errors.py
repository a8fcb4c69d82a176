"""Exception taxonomy for hillspec.

Configuration problems (bad input files, malformed windows) raise
ConfigError subclasses; numerical failures (lost Newton iterations,
winding mismatches, divergent ladders) raise NumericalError subclasses.
The CLI maps ConfigError to exit code 2 and NumericalError to 3.
"""


class HillspecError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HillspecError):
    """Invalid user-supplied configuration."""


class MalformedConfig(ConfigError):
    pass


class NonFiniteCoefficient(ConfigError):
    pass


class NumericalError(HillspecError):
    """A numerical procedure failed to meet its contract."""


class ToleranceNotMet(NumericalError):
    pass


class NonFiniteState(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class BranchAmbiguity(NumericalError):
    pass


class NewtonDiverged(NumericalError):
    pass


class MissedRoot(NumericalError):
    pass


class ContinuationLost(NumericalError):
    pass


class WindingMismatch(NumericalError):
    pass


class DegenerateAtBoundary(NumericalError):
    """Requested a normalized eigenpair at a boundary point of geometric
    multiplicity two, where no such pair exists."""


class ZeroDenominator(NumericalError):
    pass


class FitUnstable(NumericalError):
    pass


class InconsistentCriteria(NumericalError):
    """Independent classification criteria disagreed; inputs are suspect."""


class AlphaZero(NumericalError):
    pass


class PVDiverges(NumericalError):
    pass


class ResolventPole(NumericalError):
    """A quadrature contour passed too close to an eigenvalue."""
