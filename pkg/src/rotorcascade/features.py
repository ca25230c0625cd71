"""Per-sensor feature extraction and the 144-column machine record.

Each sensor wave yields 13 time-domain and 11 time-frequency features; six
sensors give 144 columns named ``<Feature>_S<sensor>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import audit
from .errors import (
    AlignmentError,
    DegenerateEnergyError,
    DegenerateMeanError,
    DegenerateWaveError,
    FeatureMismatchError,
    InsufficientLengthError,
    InvalidInputError,
)
from .signal import DWT_LEVELS, N_SENSORS, Wave, dwt_decompose, fft_spectrum, wavelet_denoise

TIME_FEATURES = (
    "Max", "Min", "Mean", "Peak_Peak", "Var", "Std", "Rms",
    "Skew", "Kurt", "Shape", "Crest", "Pulse", "Clearance",
)
FREQ_FEATURES = (
    ("FFT_max", "FFT_mean", "FFT_std")
    + tuple(f"Energy_{i}" for i in range(1, DWT_LEVELS + 1))
    + tuple(f"Energy_{i}_por" for i in range(1, DWT_LEVELS + 1))
)
SENSOR_FEATURES = TIME_FEATURES + FREQ_FEATURES

_RATIOS = tuple(f"Energy_{i}_por" for i in range(1, DWT_LEVELS + 1))

# relative tolerance for treating a variance or mean as exactly zero
_ZERO_TOL = 1e-12


def feature_names() -> list[str]:
    """All 144 column names, sensor-major."""
    return [f"{feat}_S{s}" for s in range(1, N_SENSORS + 1) for feat in SENSOR_FEATURES]


def _samples(wave) -> np.ndarray:
    if isinstance(wave, Wave):
        return wave.samples
    x = np.asarray(wave, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InvalidInputError("a wave needs at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("non-finite samples")
    return x


def time_domain_features(wave, partial: bool = False) -> dict:
    """The 13 time-domain statistics with population (divisor M) moments.

    With ``partial=True`` undefined entries are returned as ``None`` instead of
    raising.
    """
    x = _samples(wave)
    m = x.size
    x_max = float(x.max())
    x_min = float(x.min())
    mean = float(x.sum() / m)
    centered = x - mean
    var = float(np.dot(centered, centered) / m)
    std = float(np.sqrt(var))
    rms = float(np.sqrt(np.dot(x, x) / m))
    scale = float(np.abs(x).max())
    out = {
        "Max": x_max,
        "Min": x_min,
        "Mean": mean,
        "Peak_Peak": x_max - x_min,
        "Var": var,
        "Std": std,
        "Rms": rms,
        "Skew": None,
        "Kurt": None,
        "Shape": None,
        "Crest": x_max / rms if rms > 0 else None,
        "Pulse": None,
        "Clearance": None,
    }
    root_mean = float(np.sqrt(np.abs(x)).sum() / m)
    if root_mean > 0:
        out["Clearance"] = x_max / root_mean**2

    if std > _ZERO_TOL * scale:
        # standardize first so tiny-scale waves do not underflow var**2
        z = centered / std
        out["Skew"] = float((z**3).sum() / m)
        out["Kurt"] = float((z**4).sum() / m)
    elif not partial:
        raise DegenerateWaveError("zero variance: skewness and kurtosis are undefined")

    if abs(mean) > _ZERO_TOL * scale:
        out["Shape"] = rms / abs(mean)
        out["Pulse"] = x_max / abs(mean)
    elif not partial:
        raise DegenerateMeanError("zero mean: shape and pulse factors are undefined")
    return out


def freq_domain_features(wave, partial: bool = False) -> dict:
    """FFT amplitude statistics (DC bin excluded) and wavelet layer energies."""
    x = _samples(wave)
    if x.size < 2**DWT_LEVELS or x.size % 2**DWT_LEVELS:
        raise InsufficientLengthError(f"wave length {x.size} must be a multiple of 16")
    amp = fft_spectrum(x).amplitudes[1:]
    decomp = dwt_decompose(x, DWT_LEVELS)
    energies = decomp.energies()
    total = energies.sum() + decomp.approx_energy()
    out = {
        "FFT_max": float(amp.max()),
        "FFT_mean": float(amp.mean()),
        "FFT_std": float(amp.std()),
    }
    for i, e in enumerate(energies, start=1):
        out[f"Energy_{i}"] = float(e)
    if total > 0:
        for i, e in enumerate(energies, start=1):
            out[f"Energy_{i}_por"] = float(e / total)
    elif partial:
        out.update(dict.fromkeys(_RATIOS))
    else:
        raise DegenerateEnergyError("zero wave: energy ratios are undefined")
    return out


def sensor_features(wave, partial: bool = True) -> dict:
    out = time_domain_features(wave, partial=partial)
    out.update(freq_domain_features(wave, partial=partial))
    return {name: out[name] for name in SENSOR_FEATURES}


@dataclass(frozen=True)
class FeatureVector:
    machine_id: str
    timestamp: float
    names: tuple
    values: tuple

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise InvalidInputError("names and values differ in length")
        if len(set(self.names)) != len(self.names):
            raise InvalidInputError("duplicate feature names")

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.values))

    def missing(self) -> list[str]:
        return [n for n, v in zip(self.names, self.values) if v is None]


def assemble(waves, denoise: bool = False) -> FeatureVector:
    """Build the 144-entry record from the six waves of one acquisition.

    Undefined sub-features (zero variance, zero mean, zero energy) are stored
    as ``None``.
    """
    waves = list(waves)
    if len(waves) != N_SENSORS:
        raise AlignmentError(f"expected {N_SENSORS} waves, got {len(waves)}")
    by_sensor = {w.sensor_id: w for w in waves}
    if sorted(by_sensor) != list(range(1, N_SENSORS + 1)):
        raise AlignmentError(f"sensor ids {sorted(by_sensor)} do not cover 1..6")
    first = waves[0]
    for w in waves:
        if w.machine_id != first.machine_id or w.timestamp != first.timestamp:
            raise AlignmentError(
                f"wave {w.machine_id}@{w.timestamp} does not match "
                f"{first.machine_id}@{first.timestamp}")
    names, values = [], []
    for s in range(1, N_SENSORS + 1):
        wave = by_sensor[s]
        if denoise:
            wave = wavelet_denoise(wave)
        feats = sensor_features(wave, partial=True)
        for feat in SENSOR_FEATURES:
            names.append(f"{feat}_S{s}")
            values.append(feats[feat])
    return FeatureVector(first.machine_id, first.timestamp, tuple(names), tuple(values))


@dataclass
class FeatureMatrix:
    """Rectangular feature table; ``missing`` marks undefined cells.

    Missing cells hold NaN in ``values`` but code should consult ``missing``.
    """

    names: list
    values: np.ndarray
    machine_ids: list
    timestamps: np.ndarray
    labels: np.ndarray | None = None
    missing: np.ndarray = field(default=None)

    def __post_init__(self):
        self.names = list(self.names)
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.machine_ids), len(self.names))
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.machine_ids = list(self.machine_ids)
        if self.missing is None:
            self.missing = np.isnan(self.values)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.size != len(self.machine_ids):
                raise InvalidInputError("labels and rows differ in length")
        if self.timestamps.size != len(self.machine_ids):
            raise InvalidInputError("timestamps and rows differ in length")
        if len(set(self.names)) != len(self.names):
            raise InvalidInputError("duplicate feature names")

    @classmethod
    def from_vectors(cls, vectors, labels=None) -> "FeatureMatrix":
        vectors = list(vectors)
        if not vectors:
            raise InvalidInputError("no feature vectors")
        names = list(vectors[0].names)
        rows = []
        for v in vectors:
            if list(v.names) != names:
                raise InvalidInputError("feature vectors do not share one name list")
            rows.append([np.nan if x is None else x for x in v.values])
        return cls(names, np.array(rows, dtype=float),
                   [v.machine_id for v in vectors], [v.timestamp for v in vectors], labels)

    def __len__(self):
        return len(self.machine_ids)

    @property
    def keys(self) -> list:
        return list(zip(self.machine_ids, self.timestamps.tolist()))

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=int)
        return FeatureMatrix(
            self.names, self.values[rows], [self.machine_ids[i] for i in rows],
            self.timestamps[rows], None if self.labels is None else self.labels[rows],
            self.missing[rows])

    def select(self, names) -> "FeatureMatrix":
        index = {n: j for j, n in enumerate(self.names)}
        absent = [n for n in names if n not in index]
        if absent:
            raise FeatureMismatchError(f"features not present: {', '.join(absent)}")
        cols = [index[n] for n in names]
        return FeatureMatrix(list(names), self.values[:, cols], self.machine_ids,
                             self.timestamps, self.labels, self.missing[:, cols])

    def with_labels(self, labels) -> "FeatureMatrix":
        return FeatureMatrix(self.names, self.values, self.machine_ids,
                             self.timestamps, labels, self.missing)

    def machines(self) -> list:
        return list(dict.fromkeys(self.machine_ids))


def featurize_arrays(arrays, labels=None, denoise: bool = True,
                     audit_phase: str = "denoise") -> FeatureMatrix:
    """Denoise each wave (own threshold), extract and assemble one row per array.

    ``audit_phase`` names the phase under which the rows are recorded when a
    fit audit is active; evaluation passes use a non-fitting phase.
    """
    vectors = [assemble(waves, denoise=denoise) for waves in arrays]
    matrix = FeatureMatrix.from_vectors(vectors, labels)
    audit.record(audit_phase, matrix.keys)
    return matrix
