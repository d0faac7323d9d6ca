"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`ScaleFnError`,
and each carries the CLI exit code it maps to.
"""


class ScaleFnError(Exception):
    exit_code = 1


class DimensionError(ScaleFnError, ValueError):
    """Matrix or vector shapes do not conform."""


class DomainError(ScaleFnError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvalidTransformError(ScaleFnError, ValueError):
    """Rational transform coefficients do not define a valid jump law."""


class ModelError(ScaleFnError, ValueError):
    """Model parameters violate a solver precondition."""


class NumericalError(ScaleFnError, ArithmeticError):
    exit_code = 2


class SingularMatrixError(NumericalError):
    pass


class DegenerateRootError(NumericalError):
    """psi'(Phi_q) vanishes, so the scale function representation breaks down."""

    exit_code = 1


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class OrbitDegeneracyError(NumericalError):
    pass


class UnsupportedModelError(ScaleFnError, ValueError):
    """The operation needs a Markovian (phase-type) reading of the blocks."""
