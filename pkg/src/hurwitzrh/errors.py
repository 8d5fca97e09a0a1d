"""Exception hierarchy shared by all modules."""


class HurwitzError(Exception):
    """Base class for everything raised by this package."""


# ---- covering / configuration problems -------------------------------------

class DegenerateCovering(HurwitzError):
    """Covering violates the standing assumptions (non-simple or colliding
    branch points, repeated roots, degree too low, ...)."""


class NotAdmissible(HurwitzError):
    """The requested line direction hits a Stokes ray, or two branch-point
    projections coincide."""


class AssumptionViolated(HurwitzError):
    """Ordering, cut pairing or sheet conventions do not hold for the
    covering at hand."""


class BasisDecompositionUnavailable(HurwitzError):
    """The contour basis cannot be expressed through the steepest-descent
    contours for this covering."""


# ---- kernel / numerics problems ---------------------------------------------

class DiagonalSingularity(HurwitzError):
    """Kernel evaluated at coinciding arguments."""


class PeriodSolveFailure(HurwitzError):
    """Period matrix is singular or a cycle lift failed to close up."""


class OnDeformationDivisor(HurwitzError):
    """det(B + q) vanishes; the deformed kernel does not exist here."""


class SpectrumMismatch(HurwitzError):
    """Numerical eigenvalues could not be matched to the predicted multiset."""


class ExpansionFailure(HurwitzError):
    """Local expansion extraction did not converge to tolerance."""


class ContourCollision(HurwitzError):
    """A projection ray passes through another branch point."""


class StokesRayCrossed(HurwitzError):
    """Requested contour rotation reaches a Stokes ray."""


class QuadratureFailure(HurwitzError):
    """Adaptive quadrature could not reach the requested tolerance."""


class TailBoundViolated(HurwitzError):
    """Exponential tail of a truncated contour exceeds the error budget."""


class ConsistencyFailure(HurwitzError):
    """An exact identity between monodromy matrices fails."""
