"""Exception hierarchy shared by all modules."""


class CvxMetricsError(Exception):
    """Base class for all package errors."""


class NotInterior(CvxMetricsError):
    """A point expected to lie strictly inside a domain does not."""


class NotBoundary(CvxMetricsError):
    """A point expected to lie on the boundary (within tolerance) does not."""


class DegenerateDirection(CvxMetricsError):
    """A direction vector is zero (or numerically zero)."""


class Singular(CvxMetricsError):
    """An affine map is singular or too ill-conditioned to invert."""


class NoSeparator(CvxMetricsError):
    """Failed to produce a supporting functional numerically."""


class EmptyIntersection(CvxMetricsError):
    """Neither set meets the working ball in a local Hausdorff estimate."""


class NonconvexSamples(CvxMetricsError):
    """Sampled function values violate convexity beyond tolerance."""


class TooFewPoints(CvxMetricsError):
    """A finite-metric operation needs more points than supplied."""


class MismatchedEndpoints(CvxMetricsError):
    """Triangle sides do not share endpoints pairwise."""


class EmptyGraph(CvxMetricsError):
    """No grid node qualified for the Finsler graph."""


class Disconnected(CvxMetricsError):
    """No path between the query points in the Finsler graph."""


class SingularBasis(CvxMetricsError):
    """Normalization produced a (numerically) singular basis."""


class PreconditionFailed(CvxMetricsError):
    """A stated operation precondition does not hold."""


class InfeasibleSeparation(CvxMetricsError):
    """No supporting vector with the required structure separates the domain."""


class BracketTooWide(CvxMetricsError):
    """A Kobayashi bracket is too wide to locate the target point."""


class TooFewSamples(CvxMetricsError):
    """Not enough boundary samples for a covering construction."""


class DomainViolation(CvxMetricsError):
    """An evaluation point is outside the function's domain."""


class StepTooLarge(CvxMetricsError):
    """Finite-difference step exceeds the interior margin."""


class IOFailure(CvxMetricsError):
    """Report emission failed."""


class NotProperlyConvexWarning(UserWarning):
    """The chord through two points has both endpoints at infinity."""
