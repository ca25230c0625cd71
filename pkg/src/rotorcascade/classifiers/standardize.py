from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .. import audit
from ..errors import InvalidInputError


class ConstantFeatureWarning(UserWarning):
    pass


@dataclass
class Standardizer:
    """Per-feature z-score; features with zero spread pass through unscaled."""

    means: np.ndarray
    stds: np.ndarray

    @property
    def scaled(self) -> np.ndarray:
        return self.stds > 0

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.means.size:
            raise InvalidInputError(
                f"expected {self.means.size} features, got {values.shape[-1]}")
        out = values.copy()
        s = self.scaled
        out[..., s] = (values[..., s] - self.means[s]) / self.stds[s]
        return out


def fit_arrays(values, names=None) -> Standardizer:
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] == 0:
        raise InvalidInputError("cannot fit a standardizer on an empty matrix")
    means = values.mean(axis=0)
    stds = values.std(axis=0)
    flat = stds <= 1e-12 * np.maximum(1.0, np.abs(means))
    if flat.any():
        which = np.flatnonzero(flat)
        label = [names[j] for j in which] if names is not None else which.tolist()
        warnings.warn(f"constant features passed through unscaled: {label}",
                      ConstantFeatureWarning, stacklevel=2)
        stds = np.where(flat, 0.0, stds)
    return Standardizer(means, stds)


def standardize_fit(matrix) -> Standardizer:
    audit.record("standardize", matrix.keys)
    return fit_arrays(matrix.values, matrix.names)


def standardize_apply(std: Standardizer, matrix):
    from ..features import FeatureMatrix

    return FeatureMatrix(matrix.names, std.apply(matrix.values), matrix.machine_ids,
                         matrix.timestamps, matrix.labels, matrix.missing)
