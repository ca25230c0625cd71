"""Time-weighted accuracy S and consistency C for run-to-failure prediction series.

A loop is the run of one machine from normal operation to breakdown, split
into a normal, a risky and a high-risk interval with N1, N2 and N3 samples.
Misclassifying a sample costs a constant in the normal interval, a cost that
grows logarithmically through the risky interval and quadratically through the
high-risk interval. The three coefficients are calibrated so that getting a
whole interval wrong costs exactly its weight (default 0.2 / 0.3 / 0.5), which
puts S in [0, 1].
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLayoutError, InfeasibleCalibrationError, InvalidInputError

NORMAL, RISKY, HIGH_RISK = 0, 1, 2
DEFAULT_WEIGHTS = (0.2, 0.3, 0.5)


class CalibrationWarning(UserWarning):
    """beta or gamma came out negative; S is no longer confined to [0, 1]."""


@dataclass(frozen=True)
class LoopLayout:
    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        if self.n1 < 2:
            raise DegenerateLayoutError(f"normal interval needs >= 2 samples, got {self.n1}")
        if self.n2 < 1 or self.n3 < 1:
            raise DegenerateLayoutError(
                f"risky and high-risk intervals need >= 1 sample, got {self.n2}, {self.n3}")

    @property
    def n(self) -> int:
        return self.n1 + self.n2 + self.n3

    def truth(self) -> np.ndarray:
        return np.repeat([NORMAL, RISKY, HIGH_RISK], [self.n1, self.n2, self.n3])

    def slices(self):
        a, b = self.n1, self.n1 + self.n2
        return slice(0, a), slice(a, b), slice(b, self.n)

    @classmethod
    def from_truth(cls, truth) -> "LoopLayout":
        truth = np.asarray(truth, dtype=int)
        counts = [int(np.sum(truth == k)) for k in (NORMAL, RISKY, HIGH_RISK)]
        layout = cls(*counts)
        if not np.array_equal(truth, layout.truth()):
            raise InvalidInputError("truth is not ordered normal -> risky -> high-risk")
        return layout


@dataclass(frozen=True)
class PredictionSeries:
    truth: np.ndarray
    predicted: np.ndarray
    layout: LoopLayout

    def __post_init__(self):
        truth = np.asarray(self.truth, dtype=int)
        predicted = np.asarray(self.predicted, dtype=int)
        if truth.size != self.layout.n or predicted.size != self.layout.n:
            raise InvalidInputError(
                f"series length {truth.size}/{predicted.size} != layout size {self.layout.n}")
        if not np.array_equal(truth, self.layout.truth()):
            raise InvalidInputError("truth is inconsistent with the loop layout")
        if not np.all(np.isin(predicted, (NORMAL, RISKY, HIGH_RISK))):
            raise InvalidInputError("predicted states must be 0, 1 or 2")
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "predicted", predicted)

    @classmethod
    def from_predictions(cls, predicted, layout: LoopLayout) -> "PredictionSeries":
        return cls(layout.truth(), predicted, layout)


@dataclass(frozen=True)
class Calibration:
    alpha: float
    beta: float
    gamma: float
    layout: LoopLayout
    weights: tuple = DEFAULT_WEIGHTS

    @property
    def feasible(self) -> bool:
        """True when beta, gamma >= 0, i.e. S is guaranteed to lie in [0, 1]."""
        return self.beta >= 0 and self.gamma >= 0


@dataclass(frozen=True)
class OpaiReport:
    accuracy: float
    s: float
    c: float
    c1: float
    c2: float
    c3: float

    def as_dict(self) -> dict:
        return {"accuracy": self.accuracy, "s": self.s, "c": self.c,
                "c1": self.c1, "c2": self.c2, "c3": self.c3}


def calibrate(layout: LoopLayout, weights=DEFAULT_WEIGHTS) -> Calibration:
    """Solve for alpha, beta, gamma so an all-wrong loop loses exactly ``weights``."""
    w1, w2, w3 = (float(w) for w in weights)
    if abs(w1 + w2 + w3 - 1.0) > 1e-12:
        raise InvalidInputError(f"weights must sum to 1, got {weights}")
    n1, n2, n3 = layout.n1, layout.n2, layout.n3
    ln_n1 = math.log(n1)
    alpha = w1 / (n1 * ln_n1)
    base = alpha * ln_n1
    log_sum = math.fsum(math.log(j) for j in range(1, n2 + 1))
    numerator = w2 - n2 * base
    if n2 == 1:
        if abs(numerator) > 1e-12:
            raise InfeasibleCalibrationError(
                f"a single risky sample costs {base:.6g}, cannot reach weight {w2}")
        beta = 0.0
    else:
        beta = numerator / log_sum
    square_sum = n3 * (n3 + 1) * (2 * n3 + 1) // 6
    gamma = (w3 - n3 * (beta * math.log(n2) + base)) / square_sum
    calib = Calibration(alpha, beta, gamma, layout, (w1, w2, w3))
    if not calib.feasible:
        warnings.warn(
            f"layout {n1}/{n2}/{n3} gives beta={beta:.4g}, gamma={gamma:.4g}; "
            "S may leave [0, 1]", CalibrationWarning, stacklevel=2)
    return calib


def error_costs(calib: Calibration) -> np.ndarray:
    """Cost of misclassifying each position of the loop."""
    layout = calib.layout
    base = calib.alpha * math.log(layout.n1)
    normal = np.full(layout.n1, base)
    risky = calib.beta * np.log(np.arange(1, layout.n2 + 1)) + base
    high = calib.gamma * np.arange(1, layout.n3 + 1, dtype=float) ** 2 \
        + calib.beta * math.log(layout.n2) + base
    return np.concatenate([normal, risky, high])


def s_score(series: PredictionSeries, calib: Calibration) -> float:
    if calib.layout != series.layout:
        raise InvalidInputError(
            f"calibration for {calib.layout} does not match series layout {series.layout}")
    wrong = series.predicted != series.truth
    return float(1.0 - math.fsum(error_costs(calib)[wrong]))


def _interval_consistency(pred: np.ndarray) -> float:
    if pred.size < 2:
        return 1.0
    jumps = np.diff(pred).astype(float)
    return float(1.0 - np.dot(jumps, jumps) / (pred.size - 1))


def c_score(predicted, layout: LoopLayout) -> tuple:
    """(C, C1, C2, C3); jumps across interval boundaries are not counted."""
    predicted = np.asarray(predicted, dtype=int)
    if predicted.size != layout.n:
        raise InvalidInputError(f"expected {layout.n} predictions, got {predicted.size}")
    parts = [_interval_consistency(predicted[sl]) for sl in layout.slices()]
    return (sum(parts) / 3.0, *parts)


def consistency(predicted) -> float:
    """Consistency of a single interval (used for healthy machines)."""
    return _interval_consistency(np.asarray(predicted, dtype=int))


def accuracy(series: PredictionSeries) -> float:
    return float(np.mean(series.predicted == series.truth))


def opai(series: PredictionSeries, weights=DEFAULT_WEIGHTS) -> OpaiReport:
    calib = calibrate(series.layout, weights)
    c, c1, c2, c3 = c_score(series.predicted, series.layout)
    return OpaiReport(accuracy(series), s_score(series, calib), c, c1, c2, c3)


def multi_loop_opai(loops, weights=DEFAULT_WEIGHTS) -> OpaiReport:
    """Pool accuracy over all samples; average S and C over loops."""
    loops = list(loops)
    if not loops:
        raise InvalidInputError("no loops to score")
    reports = [opai(loop, weights) for loop in loops]
    correct = sum(int(np.sum(l.predicted == l.truth)) for l in loops)
    total = sum(l.layout.n for l in loops)

    def mean(attr):
        return math.fsum(getattr(r, attr) for r in reports) / len(reports)

    return OpaiReport(correct / total, mean("s"), mean("c"), mean("c1"), mean("c2"), mean("c3"))


# Illustrative prediction series, five failure archetypes at a fixed accuracy.

ARCHETYPES = {
    1: "correct in normal and risky, misses part of the high-risk interval",
    2: "errors in the risky interval, flickering between normal and high-risk",
    3: "deterioration fully caught, false alarms late in the normal interval",
    4: "high-risk correct, unstable in the normal and risky intervals",
    5: "normal correct, poor around the risky/high-risk edge",
}


def _switching_values(rng, n, choices, switches):
    """A run of ``n`` values drawn from ``choices`` that changes ``switches`` times."""
    cuts = np.sort(rng.choice(np.arange(1, n), size=min(switches, n - 1), replace=False)) if n > 1 else []
    values = np.empty(n, dtype=int)
    current = rng.choice(choices)
    start = 0
    for cut in list(cuts) + [n]:
        values[start:cut] = current
        others = [c for c in choices if c != current]
        current = rng.choice(others) if others else current
        start = cut
    return values


def archetype_series(kind: int, layout: LoopLayout, target_accuracy: float,
                     seed: int = 0) -> PredictionSeries:
    if kind not in ARCHETYPES:
        raise InvalidInputError(f"archetype kind must be 1..5, got {kind}")
    if not 0.0 <= target_accuracy <= 1.0:
        raise InvalidInputError("target accuracy must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n1, n2, n3 = layout.n1, layout.n2, layout.n3
    truth = layout.truth()
    pred = truth.copy()
    n_err = int(round((1.0 - target_accuracy) * layout.n))
    normal, risky, high = (np.arange(layout.n)[sl] for sl in layout.slices())

    def need(cap):
        if n_err > cap:
            raise InvalidInputError(
                f"archetype {kind} cannot place {n_err} errors in {cap} positions")

    if kind == 1:
        need(n3)
        start = int(rng.integers(0, n3 - n_err + 1))
        pred[high[start:start + n_err]] = RISKY
    elif kind == 2:
        need(n2)
        pos = rng.choice(risky, size=n_err, replace=False)
        pred[pos] = rng.choice([NORMAL, HIGH_RISK], size=n_err)
    elif kind == 3:
        need(n1)
        if n_err:
            pred[normal[n1 - n_err:]] = _switching_values(rng, n_err, [RISKY, HIGH_RISK], 2)
    elif kind == 4:
        need(n1 + n2)
        k_risky = min(n2, n_err // 2)
        k_normal = n_err - k_risky
        if k_normal > n1:
            k_risky += k_normal - n1
            k_normal = n1
        pos = rng.choice(normal, size=k_normal, replace=False)
        pred[pos] = rng.choice([RISKY, HIGH_RISK], size=k_normal)
        pos = rng.choice(risky, size=k_risky, replace=False)
        pred[pos] = rng.choice([NORMAL, HIGH_RISK], size=k_risky)
    else:
        need(n2 + n3)
        k_high = min(n3, n_err // 2)
        k_risky = n_err - k_high
        if k_risky > n2:
            k_high += k_risky - n2
            k_risky = n2
        if k_risky:
            pred[risky[n2 - k_risky:]] = rng.choice([NORMAL, HIGH_RISK], size=k_risky)
        if k_high:
            pred[high[:k_high]] = rng.choice([NORMAL, RISKY], size=k_high)
    return PredictionSeries(truth, pred, layout)
