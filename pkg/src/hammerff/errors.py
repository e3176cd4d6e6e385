"""Exception types raised across the package."""


class HammerffError(Exception):
    """Base class for all package errors."""


class MalformedSystemError(HammerffError, ValueError):
    """Transfer function coefficients do not describe a valid system."""


class StabilityError(HammerffError):
    """A closed loop (or a system required to be stable) has poles on or outside the unit circle."""

    def __init__(self, message, pole_moduli=()):
        super().__init__(message)
        self.pole_moduli = tuple(float(p) for p in pole_moduli)


class ConfigurationError(HammerffError, ValueError):
    """Invalid experiment, plant or reference configuration."""


class SingularNormalMatrixError(HammerffError, ArithmeticError):
    """The learning normal matrix cannot be factorized."""


class DegenerateBasisError(HammerffError, ArithmeticError):
    """Basis-function regressors are rank deficient (e.g. constant reference)."""


class DomainError(HammerffError, ValueError):
    """Argument outside the atanh domain of the inverse saturation."""

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class ExcitationError(HammerffError):
    """Identification data do not excite the model sufficiently."""


class NonFiniteCostError(HammerffError, FloatingPointError):
    """Cost function returned NaN or inf during optimization."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
