"""Seeded synthetic rotor-vibration fleet.

Waves are a two-tone sinusoid plus white noise, with sparse transients in the
high-risk interval. The per-sensor, per-interval standard deviations follow
the fleet statistics of a real compressor/turbine data set; the rotation
frequency drops as the rotor deteriorates. Each acquisition draws a common
amplitude and frequency perturbation shared by its six sensors, so adjacent
states overlap; the risky/high-risk pair overlaps more than normal/abnormal.
On faulty machines the wave power also rises steadily inside each interval
(mean-one ramp), so rows near an interval boundary resemble the next state.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cascade import DAY, MachineTimeline, label_timeline
from .errors import InvalidInputError
from .signal import N_SENSORS, WAVE_LENGTH, Wave

# per-sensor standard deviation (um) in the normal, risky and high-risk intervals
TABLE_STDS = np.array([
    [2.0366, 6.7985, 11.1055],
    [2.8504, 6.8678, 12.3792],
    [2.1308, 10.1692, 12.5702],
    [2.2505, 9.9623, 11.8240],
    [4.8239, 12.6074, 15.6947],
    [5.0908, 12.1179, 16.1177],
])

# base counts of wave arrays per machine: faulty normal/risky/high-risk, healthy normal
DEFAULT_COUNTS = (35, 24, 21, 70)

OBSERVATION_SPAN = 180 * DAY
FLEET_START = 1_600_000_000


@dataclass(frozen=True)
class DegradationProfile:
    stds: np.ndarray = field(default_factory=lambda: TABLE_STDS.copy())
    frequencies: tuple = (40.0, 28.0, 21.0)
    frequency_spread: float = 4.0
    amplitude_spread: float = 0.3
    harmonic_ratio: float = 0.35
    noise_fraction: float = 0.3
    spike_rate: float = 3.0
    spike_scale: float = 2.5
    machine_jitter: float = 0.10
    drift: float = 0.5
    length: int = WAVE_LENGTH

    def validate(self):
        stds = np.asarray(self.stds, dtype=float)
        if stds.shape != (N_SENSORS, 3) or np.any(stds <= 0):
            raise InvalidInputError("profile stds must be a positive 6x3 table")
        if np.any(np.diff(stds, axis=1) <= 0):
            raise InvalidInputError("profile stds must increase normal -> risky -> high-risk")
        if not (self.frequencies[0] > self.frequencies[1] > self.frequencies[2] > 0):
            raise InvalidInputError("profile frequencies must decrease normal -> risky -> high-risk")
        if 2 * (self.frequencies[0] + 3 * self.frequency_spread) >= self.length / 2:
            raise InvalidInputError("harmonic exceeds the Nyquist bin")
        if not 0 <= self.drift < 1:
            raise InvalidInputError("drift must lie in [0, 1)")
        if not 0 <= self.noise_fraction < 1:
            raise InvalidInputError("noise_fraction must lie in [0, 1)")


@dataclass
class MachineRecord:
    timeline: MachineTimeline
    arrays: list
    labels: np.ndarray
    faulty: bool

    @property
    def machine_id(self):
        return self.timeline.machine_id


def _spikes(rng, n, scale):
    out = np.zeros(n)
    for _ in range(rng.poisson(scale[0])):
        at = int(rng.integers(0, n - 8))
        sign = rng.choice([-1.0, 1.0])
        out[at:at + 8] += sign * scale[1] * np.exp(-np.arange(8) / 2.0)
    return out


def _wave_samples(rng, profile, std, freq, state):
    m = profile.length
    t = np.arange(m) / m
    noise_var = (profile.noise_fraction * std) ** 2
    tone_var = std**2 - noise_var
    a1 = np.sqrt(2.0 * tone_var / (1.0 + profile.harmonic_ratio**2))
    a2 = profile.harmonic_ratio * a1
    phases = rng.uniform(0, 2 * np.pi, size=2)
    x = (a1 * np.sin(2 * np.pi * freq * t + phases[0])
         + a2 * np.sin(2 * np.pi * 2 * freq * t + phases[1])
         + rng.normal(0.0, np.sqrt(noise_var), size=m))
    if state == 2 and profile.spike_rate > 0:
        x = x + _spikes(rng, m, (profile.spike_rate, profile.spike_scale * std))
    return x


def _drift_factors(labels, drift):
    """Power multiplier rising linearly from 1 - drift to 1 + drift within each interval."""
    out = np.ones(labels.size)
    for state in np.unique(labels):
        rows = np.flatnonzero(labels == state)
        if rows.size > 1:
            out[rows] = 1.0 + drift * np.linspace(-1.0, 1.0, rows.size)
    return out


def _timestamps(faulty, counts, start):
    if not faulty:
        n = counts[0]
        return start + np.linspace(0, OBSERVATION_SPAN, n).round().astype(np.int64), None
    failure = start + OBSERVATION_SPAN
    n1, n2, n3 = counts
    normal = np.linspace(failure - OBSERVATION_SPAN, failure - 31 * DAY, n1)
    risky = np.linspace(failure - 30 * DAY, failure - DAY - 3600, n2)
    high = np.linspace(failure - DAY, failure - 60, n3)
    return np.concatenate([normal, risky, high]).round().astype(np.int64), failure


def generate_machine(profile: DegradationProfile = None, faulty: bool = True, counts=None,
                     seed: int = 0, machine_id: str = "M1", start: int = FLEET_START) -> MachineRecord:
    """One machine's timeline, wave arrays and truth labels.

    ``counts`` is (normal, risky, high-risk) for a faulty machine and
    (normal,) for a healthy one.
    """
    profile = profile or DegradationProfile()
    profile.validate()
    if counts is None:
        counts = DEFAULT_COUNTS[:3] if faulty else DEFAULT_COUNTS[3:]
    counts = tuple(int(c) for c in counts)
    if (faulty and (len(counts) != 3 or min(counts) < 1)) or (not faulty and counts[0] < 1):
        raise InvalidInputError(f"invalid wave counts {counts} for faulty={faulty}")
    rng = np.random.default_rng(seed)
    jitter = 1.0 + rng.uniform(-profile.machine_jitter, profile.machine_jitter, size=N_SENSORS)
    freq_offset = rng.uniform(-1.0, 1.0) * profile.frequency_spread / 2
    stamps, failure = _timestamps(faulty, counts if faulty else counts[:1], start)
    timeline = MachineTimeline(machine_id, stamps.astype(float).tolist(),
                               None if failure is None else float(failure))
    labels = np.asarray(label_timeline(timeline), dtype=int)
    stds = np.asarray(profile.stds, dtype=float) * jitter[:, None]
    sig = profile.amplitude_spread
    ramp = _drift_factors(labels, profile.drift if faulty else 0.0)
    arrays = []
    for ts, state, power in zip(timeline.timestamps, labels, ramp):
        # mean-one power scaling keeps the pooled interval variance on target
        scale = np.exp(sig * rng.normal() - sig**2) * np.sqrt(power)
        freq = profile.frequencies[state] + freq_offset + rng.normal(0, profile.frequency_spread)
        freq = max(freq, 4.0)
        waves = []
        for s in range(N_SENSORS):
            samples = _wave_samples(rng, profile, stds[s, state] * scale, freq, state)
            waves.append(Wave(machine_id, s + 1, ts, samples))
        arrays.append(waves)
    return MachineRecord(timeline, arrays, labels, faulty)


def machine_counts(rng, base, faulty):
    """Per-machine counts jittered by up to +-15% around ``base``."""
    pick = base[:3] if faulty else base[3:]
    return tuple(max(2, int(round(c * rng.uniform(0.85, 1.15)))) for c in pick)


def generate_fleet(n_faulty: int = 7, n_healthy: int = 7, counts=DEFAULT_COUNTS, seed: int = 0,
                   profile: DegradationProfile = None) -> list:
    """Machines M1..M{n_faulty} are faulty, the following ids healthy."""
    if n_faulty < 0 or n_healthy < 0 or n_faulty + n_healthy < 1:
        raise InvalidInputError("the fleet needs at least one machine")
    profile = profile or DegradationProfile()
    root = np.random.SeedSequence(seed)
    children = root.spawn(n_faulty + n_healthy + 1)
    count_rng = np.random.default_rng(children[-1])
    fleet = []
    for i in range(n_faulty + n_healthy):
        faulty = i < n_faulty
        machine_seed = int(children[i].generate_state(1)[0])
        fleet.append(generate_machine(
            profile, faulty, machine_counts(count_rng, counts, faulty), machine_seed,
            f"M{i + 1}", FLEET_START + i * DAY))
    return fleet
