"""Exception types raised across the package.

Every error carries a short ``code`` so the command-line driver can print a
machine-readable failure line.
"""


class RotorError(ValueError):
    code = "error"


class InvalidInputError(RotorError):
    code = "invalid-input"


class InsufficientLengthError(RotorError):
    code = "insufficient-length"


class DegenerateWaveError(RotorError):
    code = "degenerate-wave"


class DegenerateMeanError(RotorError):
    code = "degenerate-mean"


class DegenerateEnergyError(RotorError):
    code = "degenerate-energy"


class AlignmentError(RotorError):
    code = "alignment"


class DegenerateLayoutError(RotorError):
    code = "degenerate-layout"


class InfeasibleCalibrationError(RotorError):
    code = "infeasible-calibration"


class InvalidLabelsError(RotorError):
    code = "invalid-labels"


class DivergenceError(RotorError):
    code = "divergence"


class FeatureMismatchError(RotorError):
    code = "feature-mismatch"


class MalformedCSVError(RotorError):
    code = "malformed-csv"

    def __init__(self, message, path=None, line=None):
        super().__init__(message)
        self.path = path
        self.line = line
