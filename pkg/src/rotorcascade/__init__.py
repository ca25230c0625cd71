"""Rotor deterioration prognosis: vibration features, cascade classifiers, time-weighted scoring."""
from .errors import RotorError
from .metrics import LoopLayout, OpaiReport, PredictionSeries, calibrate, c_score, opai, s_score

__version__ = "0.1.0"

__all__ = ["LoopLayout", "OpaiReport", "PredictionSeries", "RotorError", "calibrate",
           "c_score", "opai", "s_score", "__version__"]
