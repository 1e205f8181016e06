"""Exception types shared across the package."""


class QrsimError(Exception):
    """Base class for all qrsim errors."""


class NonPositiveRate(QrsimError, ValueError):
    """A rate or frequency that must be positive is not."""


class ZeroDetuning(QrsimError, ValueError):
    """omega_q equals omega_r; the dispersive expansion divides by omega_qr."""


class NegativeOccupancy(QrsimError, ValueError):
    """Thermal occupancy n_th must be >= 0."""


class NonPositiveRatio(QrsimError, ValueError):
    """hbar*omega/(k_B T) must be > 0 for the Bose-Einstein occupancy."""


class NonPositiveTau(QrsimError, ValueError):
    """Measurement time must be > 0."""


class FidelityOutOfRange(QrsimError, ValueError):
    """Target fidelity must lie strictly between 0 and 1."""


class DegenerateDenominator(QrsimError, ZeroDivisionError):
    """phi+ + phi- vanished; the stationary value is undefined."""


class StepTooLarge(QrsimError, ValueError):
    """Integrator step does not resolve the fastest frequency."""


class UnsupportedCombination(QrsimError, ValueError):
    """Requested oracle configuration is deliberately unsupported."""


class DimensionMismatch(QrsimError, ValueError):
    """Operator or state dimensions are inconsistent."""


class FitDiverged(QrsimError, RuntimeError):
    """Gauss-Newton exponential fit failed to converge."""


class ParseError(QrsimError, ValueError):
    """Config file could not be parsed; message carries line/column."""


class UnknownKey(QrsimError, ValueError):
    """Config file contains a key outside the documented schema."""


class IoError(QrsimError, OSError):
    """Output file could not be written."""


class ValidityWarning(UserWarning):
    """A formula is being evaluated outside its stated validity window."""
