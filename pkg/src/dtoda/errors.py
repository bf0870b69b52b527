"""Exception and warning types shared across the package."""


class DtodaError(Exception):
    """Base class for all errors raised by this package."""


# --- density -----------------------------------------------------------

class NonPositiveDensity(DtodaError):
    """The background density is not strictly positive on the annulus."""


class OutOfAnnulus(DtodaError):
    """A radial argument lies outside [r0^2, r1^2]."""


# --- conformal maps ----------------------------------------------------

class InsideDisk(DtodaError):
    """Map evaluation requested at |w| < 1."""


class PointInside(DtodaError):
    """Inversion target lies inside the domain enclosed by the curve."""


class NoConvergence(DtodaError):
    """Newton iteration for map inversion did not converge."""


class CoincidentPoints(DtodaError):
    """Green's function requested at coincident arguments."""


class NotUnivalent(DtodaError):
    """The truncated map fails the univalence check."""


class DegenerateTangent(DtodaError):
    """Boundary tangent vector vanishes at a sample point."""


# --- moments -----------------------------------------------------------

class QuadratureNotConverged(DtodaError):
    """Contour quadrature did not stabilize under refinement."""


class TooCloseToBoundary(DtodaError):
    """Evaluation point too close to the contour for the quadrature step."""


class TruncationWarning(UserWarning):
    """A truncated series was evaluated with a non-negligible last term."""


# --- tau ---------------------------------------------------------------

class ToleranceNotReached(DtodaError):
    """Adaptive integration stalled above the requested tolerance."""


class OutOfAdmissibleInterval(DtodaError):
    """t0 outside the interval reachable within the annulus."""


class StencilInfeasible(DtodaError):
    """Finite-difference stencil leaves the admissible parameter region."""


class NoiseFloor(DtodaError):
    """Requested derivative is dominated by quadrature noise."""


# --- inverse problem ---------------------------------------------------

class SingularJacobian(DtodaError):
    """The Newton Jacobian is numerically singular."""


class MaxIterExceeded(DtodaError):
    """Newton iteration exceeded the allowed number of steps."""


class UnivalenceLost(DtodaError):
    """Newton update cannot be damped into a univalent map."""


class LeftAnnulus(DtodaError):
    """Newton update cannot keep the boundary inside the annulus."""


# --- growth ------------------------------------------------------------

class AdmissibleIntervalExceeded(DtodaError):
    """Requested growth extends t0 past the admissible interval."""


class SelfIntersection(DtodaError):
    """The advancing front self-intersects."""


class FitResidualTooLarge(DtodaError):
    """Markers cannot be represented by the truncated map family."""


class BranchAmbiguity(DtodaError):
    """Curve crosses the positive real axis non-transversally."""


# --- dKdV --------------------------------------------------------------

class NonMonotone(DtodaError):
    """The dKdV string equation has no unique monotone branch."""
