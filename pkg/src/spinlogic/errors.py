"""Exception hierarchy for the simulator."""


class SpinLogicError(Exception):
    """Base class for all errors raised by this package."""


class EvanescentMedium(SpinLogicError, ValueError):
    """Electron energy lies at or below the potential of a medium."""


class TotalInternalReflection(SpinLogicError, ValueError):
    """No real refraction angle exists for the requested incidence."""


class NonUnitary(SpinLogicError, ValueError):
    pass


class GeometryError(SpinLogicError, ValueError):
    pass


class NoConvergence(SpinLogicError, RuntimeError):
    pass


class SingularMatrix(SpinLogicError, ArithmeticError):
    pass


class NoBracket(SpinLogicError, ValueError):
    """Calibration scan window does not contain the requested target."""


class UnknownGate(SpinLogicError, KeyError):
    pass


class Inconclusive(SpinLogicError, RuntimeError):
    """Measurement probabilities do not single out an outcome."""


class CalibrationMissing(SpinLogicError, RuntimeError):
    pass


class BelowContrast(SpinLogicError, RuntimeError):
    """Designated-high current does not exceed the others by the threshold."""

    def __init__(self, contrast, threshold):
        super().__init__(f"contrast {contrast:.4g} below threshold {threshold:.4g}")
        self.contrast = contrast
        self.threshold = threshold


class ParseError(SpinLogicError, ValueError):
    pass


class UnitError(ParseError):
    pass
