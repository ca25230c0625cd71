import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorcascade.cascade import PipelineConfig, cv_stage, label_timeline, prepare_stage
from rotorcascade.datagen import (
    DegradationProfile,
    generate_fleet,
    generate_machine,
)
from rotorcascade.errors import InvalidInputError
from rotorcascade.features import featurize_arrays
from rotorcascade.signal import fft_spectrum

SENSOR1_TARGETS = (2.0366, 6.7985, 11.1055)


def pooled(fleet, sensor, state, stat):
    samples = [waves[sensor - 1].samples
               for m in fleet for waves, lab in zip(m.arrays, m.labels) if lab == state]
    return stat(np.concatenate(samples))


@pytest.fixture(scope="module")
def default_fleet():
    return generate_fleet(seed=0)


def test_sensor1_interval_stds_near_targets(default_fleet):
    for state, target in enumerate(SENSOR1_TARGETS):
        got = pooled(default_fleet, 1, state, np.std)
        assert abs(got - target) <= 0.15 * target, (state, got, target)


def test_fleet_is_deterministic(default_fleet):
    again = generate_fleet(seed=0)
    for a, b in zip(default_fleet, again):
        assert a.timeline == b.timeline
        assert np.array_equal(a.labels, b.labels)
        for wa, wb in zip(a.arrays, b.arrays):
            assert all(np.array_equal(x.samples, y.samples) for x, y in zip(wa, wb))


def test_distinct_seeds_share_schema():
    a = generate_fleet(2, 1, seed=1)
    b = generate_fleet(2, 1, seed=2)
    assert [m.machine_id for m in a] == [m.machine_id for m in b] == ["M1", "M2", "M3"]
    assert not np.array_equal(a[0].arrays[0][0].samples, b[0].arrays[0][0].samples)


def test_healthy_machine_only_normal():
    m = generate_machine(faulty=False, counts=(20,), seed=4)
    assert m.timeline.failure_time is None
    assert set(m.labels.tolist()) == {0} and len(m.arrays) == 20


def test_faulty_labels_follow_timeline():
    m = generate_machine(counts=(10, 8, 6), seed=3)
    assert np.bincount(m.labels).tolist() == [10, 8, 6]
    assert m.labels.tolist() == label_timeline(m.timeline)
    assert all(len(a) == 6 and a[0].timestamp == t for a, t in zip(m.arrays, m.timeline.timestamps))


@pytest.mark.parametrize("n", [5, 7])
def test_normal_share(n):
    fleet = generate_fleet(n, n, seed=11)
    labels = np.concatenate([m.labels for m in fleet])
    assert 0.6 <= np.mean(labels == 0) <= 0.8


def test_no_faulty_machines_gives_normal_rows_only():
    fleet = generate_fleet(0, 2, seed=0)
    assert all(set(m.labels.tolist()) == {0} for m in fleet)
    with pytest.raises(InvalidInputError):
        generate_fleet(0, 0)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_amplitude_ordering(seed):
    fleet = generate_fleet(3, 0, counts=(20, 15, 12, 10), seed=seed)
    for sensor in range(1, 7):
        peaks = [pooled(fleet, sensor, s, lambda x: np.max(np.abs(x))) for s in range(3)]
        assert peaks[0] < peaks[1] < peaks[2], (sensor, peaks)


def test_dominant_frequency_bin_decreases(default_fleet):
    medians = []
    for state in range(3):
        bins = [int(np.argmax(fft_spectrum(waves[0].samples).amplitudes[1:])) + 1
                for m in default_fleet for waves, lab in zip(m.arrays, m.labels) if lab == state]
        medians.append(np.median(bins))
    assert medians[0] > medians[1] > medians[2]


@pytest.mark.parametrize("change", [
    {"stds": np.ones((6, 3))},
    {"frequencies": (20.0, 28.0, 21.0)},
    {"drift": 1.0},
    {"noise_fraction": 1.5},
])
def test_invalid_profile(change):
    with pytest.raises(InvalidInputError):
        generate_machine(DegradationProfile(**change))


def test_invalid_counts():
    with pytest.raises(InvalidInputError):
        generate_machine(counts=(5, 0, 3))


@pytest.mark.slow
def test_forest_learns_generated_fleet():
    fleet = generate_fleet(5, 5, seed=0)
    arrays = [a for m in fleet for a in m.arrays]
    labels = np.concatenate([m.labels for m in fleet])
    matrix = featurize_arrays(arrays, labels)
    config = PipelineConfig(algo_params={"forest": {"n_trees": 50}})
    report = cv_stage(prepare_stage(matrix, "ternary", config), "forest", config)
    assert report.mean_accuracy > 0.8
