"""Exception types shared across the solver."""


class HatmError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HatmError, ValueError):
    """Invalid run configuration (alpha out of range, hbar = 0, ...)."""


class PoleError(HatmError, ValueError):
    """Gamma requested at a non-positive integer."""


class DomainError(HatmError, ValueError):
    """Argument outside a function's real domain."""


class ConvergenceError(HatmError):
    """A truncated series hit its term cap before reaching tolerance."""


class SingularityError(HatmError, ArithmeticError):
    """Expression evaluated at (or numerically too close to) a pole."""


class ExponentError(HatmError, ValueError):
    """Time-exponent constraint violated: a negative power of t, or an
    exp(c*t) factor fed to an operator that only accepts pure powers."""


class DegreeError(HatmError, ValueError):
    """Operator expansion would exceed quadratic nonlinearity."""


class PresetError(HatmError, ValueError):
    """Unknown built-in problem id."""


class OracleError(HatmError):
    """No reference solution registered for the requested problem."""
