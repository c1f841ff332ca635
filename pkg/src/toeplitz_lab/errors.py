"""Exception hierarchy shared by all modules."""


class ToeplitzLabError(Exception):
    """Base class for errors raised by this package."""


class ZeroCoefficient(ToeplitzLabError, ValueError):
    """A Toeplitz coefficient a or b is zero."""


class ZeroArgument(ToeplitzLabError, ValueError):
    """f(zeta) = a*zeta + b/zeta evaluated at zeta = 0."""


class NonPositiveRadius(ToeplitzLabError, ValueError):
    pass


class RadiusBelowMinimum(ToeplitzLabError, ValueError):
    """Ellipse parameter r below r_min = sqrt(|b|/|a|)."""


class DegenerateRoots(ToeplitzLabError, ArithmeticError):
    """The two characteristic roots coincide (z at a focal point)."""


class OutsideDomain(ToeplitzLabError, ValueError):
    """z is not strictly inside the ellipse E_1."""


class StepTooLarge(ToeplitzLabError, ValueError):
    """Finite-difference step too large for the local smoothness scale."""


class DimensionTooSmall(ToeplitzLabError, ValueError):
    pass


class ConvergenceFailure(ToeplitzLabError, ArithmeticError):
    """The dense eigensolver did not converge."""


class RegimeViolation(ToeplitzLabError):
    """Parameters fall outside the admissible (N, delta, r0) range."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class Infeasible(ToeplitzLabError):
    """No admissible r0 exists for the requested (N, delta, threshold)."""
