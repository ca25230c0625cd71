import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorcascade.errors import DegenerateLayoutError, InfeasibleCalibrationError, InvalidInputError
from rotorcascade.metrics import (
    CalibrationWarning,
    LoopLayout,
    PredictionSeries,
    accuracy,
    archetype_series,
    c_score,
    calibrate,
    error_costs,
    multi_loop_opai,
    opai,
    s_score,
)

from oracles import brute_c, brute_interval_sums, brute_s, calibration_by_solve

layouts = st.tuples(st.integers(2, 60), st.integers(2, 60), st.integers(1, 60))


def series(pred, layout):
    return PredictionSeries.from_predictions(pred, LoopLayout(*layout))


def test_layout_validation():
    with pytest.raises(DegenerateLayoutError):
        LoopLayout(1, 3, 2)
    with pytest.raises(DegenerateLayoutError):
        LoopLayout(4, 0, 2)
    assert LoopLayout(4, 3, 2).n == 9
    assert LoopLayout.from_truth([0, 0, 1, 2]) == LoopLayout(2, 1, 1)
    with pytest.raises(InvalidInputError):
        LoopLayout.from_truth([0, 0, 2, 1])


def test_series_validation():
    with pytest.raises(InvalidInputError):
        series([0, 0, 0], (4, 3, 2))
    with pytest.raises(InvalidInputError):
        series([0, 0, 0, 0, 1, 1, 1, 2, 3], (4, 3, 2))


@pytest.mark.parametrize("layout,expected", [
    ((4, 3, 2), ("0.0360674", "0.0837166", "0.0432112")),
    ((10, 10, 10), ("0.0086859", "0.0066206", "0.00038326")),
])
def test_calibration_worked_values(layout, expected):
    calib = calibrate(LoopLayout(*layout))
    got = (calib.alpha, calib.beta, calib.gamma)
    oracle = calibration_by_solve(*layout)
    for g, e, o in zip(got, expected, oracle):
        assert abs(g - o) <= 1e-12
        # quoted values are rounded; allow half a unit in the last digit
        half_ulp = 0.5 * 10.0 ** -len(e.split(".")[1])
        assert abs(g - float(e)) <= half_ulp


def test_calibration_of_degenerate_layout():
    with pytest.raises(DegenerateLayoutError):
        calibrate(LoopLayout(1, 3, 2))


def test_single_risky_sample_is_infeasible():
    with pytest.raises(InfeasibleCalibrationError):
        calibrate(LoopLayout(4, 1, 2))


def test_infeasible_layout_warns():
    # a long risky interval with few normal samples drives gamma negative
    with pytest.warns(CalibrationWarning):
        calib = calibrate(LoopLayout(2, 50, 1))
    assert not calib.feasible


def test_weights_must_sum_to_one():
    with pytest.raises(InvalidInputError):
        calibrate(LoopLayout(4, 3, 2), (0.2, 0.3, 0.6))


def test_worked_single_last_error():
    pred = [0, 0, 0, 0, 1, 1, 1, 2, 1]
    s = series(pred, (4, 3, 2))
    calib = calibrate(s.layout)
    got = s_score(s, calib)
    ref = brute_s(s.truth, pred, 4, 3, 2, calibration_by_solve(4, 3, 2))
    assert got == pytest.approx(0.685183, abs=1e-6)
    assert abs(got - ref) <= 1e-12


def test_s_rejects_other_layout():
    s = series([0] * 9, (4, 3, 2))
    with pytest.raises(InvalidInputError):
        s_score(s, calibrate(LoopLayout(5, 3, 1)))


def test_c_score_examples():
    lay = LoopLayout(4, 3, 2)
    assert c_score([0, 0, 0, 0, 1, 1, 1, 2, 2], lay) == (1.0, 1.0, 1.0, 1.0)
    c, c1, c2, c3 = c_score([0, 2, 0, 2, 1, 1, 1, 2, 2], lay)
    assert c1 == -3.0 and c == pytest.approx(-1 / 3)
    c, c1, c2, c3 = c_score([0, 0, 1, 0, 1, 1, 2, 2, 2], lay)
    assert (c1, c2, c3) == (pytest.approx(1 / 3), 0.5, 1.0)
    assert c == pytest.approx(0.6111, abs=1e-4)
    with pytest.raises(InvalidInputError):
        c_score([0, 0], lay)


def test_short_interval_consistency_is_one():
    c, c1, c2, c3 = c_score([0, 2, 1, 0], LoopLayout(2, 1, 1))
    assert (c2, c3) == (1.0, 1.0) and c1 == -3.0


def test_accuracy_counts():
    assert accuracy(series([0, 0, 0, 0, 1, 1, 1, 2, 2], (4, 3, 2))) == 1.0
    assert accuracy(series([1, 1, 1, 1, 0, 0, 0, 0, 0], (4, 3, 2))) == 0.0
    pred = [0] * 4 + [1] * 3 + [2] * 3
    pred[0] = pred[5] = 2
    assert accuracy(series(pred, (4, 3, 3))) == pytest.approx(0.8)


@settings(max_examples=60, deadline=None)
@given(layouts)
def test_calibration_identity(layout):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        calib = calibrate(LoopLayout(*layout))
    sums = brute_interval_sums(*layout, (calib.alpha, calib.beta, calib.gamma))
    for got, w in zip(sums, (0.2, 0.3, 0.5)):
        assert abs(got - w) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(layouts, st.integers(0, 2**32 - 1))
def test_s_matches_brute_force(layout, seed):
    lay = LoopLayout(*layout)
    pred = np.random.default_rng(seed).integers(0, 3, size=lay.n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        calib = calibrate(lay)
    s = series(pred, layout)
    ref = brute_s(s.truth, pred, *layout, (calib.alpha, calib.beta, calib.gamma))
    assert abs(s_score(s, calib) - ref) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(layouts, st.integers(0, 2**32 - 1))
def test_c_matches_brute_force_and_ignores_truth(layout, seed):
    lay = LoopLayout(*layout)
    pred = np.random.default_rng(seed).integers(0, 3, size=lay.n)
    got = c_score(pred, lay)
    ref = brute_c(list(pred), *layout)
    for g, r in zip(got, ref):
        assert abs(g - r) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(layouts)
def test_perfect_and_all_wrong(layout):
    lay = LoopLayout(*layout)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        perfect = opai(series(lay.truth(), layout))
        wrong = opai(series((lay.truth() + 1) % 3, layout))
    assert perfect.s == 1.0 and perfect.c == 1.0 and perfect.accuracy == 1.0
    assert abs(wrong.s) <= 1e-9 and wrong.accuracy == 0.0


@settings(max_examples=60, deadline=None)
@given(layouts)
def test_error_cost_shape(layout):
    lay = LoopLayout(*layout)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        calib = calibrate(lay)
    costs = error_costs(calib)
    n1, n2, _ = layout
    risky, high = costs[n1:n1 + n2], costs[n1 + n2:]
    if calib.beta >= 0:
        assert np.all(np.diff(risky) >= 0)
    if calib.gamma > 0:
        assert np.all(np.diff(high) > 0)
    # the first risky error costs the same as a normal error
    assert risky[0] == pytest.approx(costs[0], rel=1e-12)


def test_s_is_one_only_without_errors():
    lay = LoopLayout(5, 4, 3)
    calib = calibrate(lay)
    for i in range(lay.n):
        pred = lay.truth().copy()
        pred[i] = (pred[i] + 1) % 3
        assert s_score(series(pred, (5, 4, 3)), calib) < 1.0


def test_multi_loop_rules():
    a = series([0, 0, 0, 0, 1, 1, 1, 2, 2], (4, 3, 2))
    b = series([1, 1, 1, 1, 0, 0, 0, 0, 0], (4, 3, 2))
    both = multi_loop_opai([a, b])
    assert both.s == pytest.approx(0.5, abs=1e-9)
    assert both.accuracy == pytest.approx(0.5)
    assert multi_loop_opai([a]) == opai(a)
    c = series([0, 0, 1, 0, 1, 1, 2, 2, 1], (4, 3, 2))
    twin = multi_loop_opai([c, c])
    single = opai(c)
    for k in ("accuracy", "s", "c", "c1", "c2", "c3"):
        assert getattr(twin, k) == pytest.approx(getattr(single, k), abs=1e-15)
    with pytest.raises(InvalidInputError):
        multi_loop_opai([])


def test_multi_loop_pools_accuracy_by_sample():
    a = series([0, 0, 0, 0, 1, 1, 1, 2, 2], (4, 3, 2))
    b = series([0, 1, 1, 0, 2], (2, 2, 1))
    rep = multi_loop_opai([a, b])
    assert rep.accuracy == pytest.approx((9 + 3) / 14)


def test_relabelling_machines_does_not_change_s():
    a = series([0, 0, 1, 0, 1, 1, 2, 2, 1], (4, 3, 2))
    b = series([0, 0, 0, 0, 1, 0, 1, 2, 2], (4, 3, 2))
    assert multi_loop_opai([a, b]) == multi_loop_opai([b, a])


def test_archetype_definitions():
    lay = LoopLayout(40, 30, 30)
    k3 = archetype_series(3, lay, 0.8, seed=7)
    assert np.array_equal(k3.predicted[40:], k3.truth[40:])
    k1 = archetype_series(1, lay, 0.8, seed=7)
    assert np.all(k1.predicted[:70] == k1.truth[:70])
    for kind in range(1, 6):
        s = archetype_series(kind, lay, 0.8, seed=7)
        assert accuracy(s) == pytest.approx(0.8)
        assert np.array_equal(s.predicted, archetype_series(kind, lay, 0.8, seed=7).predicted)


def test_archetype_infeasible_accuracy():
    with pytest.raises(InvalidInputError):
        archetype_series(1, LoopLayout(40, 30, 30), 0.5)
    with pytest.raises(InvalidInputError):
        archetype_series(6, LoopLayout(40, 30, 30), 0.8)


def test_archetype_score_ordering():
    lay = LoopLayout(40, 30, 30)
    reports = {k: opai(archetype_series(k, lay, 0.8, seed=7)) for k in range(1, 6)}
    s = {k: r.s for k, r in reports.items()}
    assert s[3] > s[4]
    assert min(s, key=s.get) == 1
    assert max(s, key=s.get) == 3
    assert reports[2].c < reports[1].c and reports[2].c < reports[3].c


def test_all_wrong_costs_sum_to_one():
    calib = calibrate(LoopLayout(30, 20, 10))
    assert math.fsum(error_costs(calib)) == pytest.approx(1.0, abs=1e-12)
