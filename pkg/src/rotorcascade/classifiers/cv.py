"""Stratified k-fold cross-validation with per-fold consistency."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from .model import ModelSpec, train_model


class StratificationWarning(UserWarning):
    pass


@dataclass
class CvReport:
    fold_accuracy: list
    fold_c: list
    folds: list
    fold_standardizer_means: list

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracy))

    @property
    def mean_c(self) -> float:
        return float(np.mean(self.fold_c))


def fold_assignment(labels, k=5, seed=0) -> list:
    """Split row indices into ``k`` disjoint folds, dealing each class round-robin.

    Falls back to plain shuffled folds (with a warning) when a class has fewer
    than ``k`` rows.
    """
    labels = np.asarray(labels)
    n = labels.size
    if k < 2:
        raise InvalidInputError("need at least 2 folds")
    if n < k:
        raise InvalidInputError(f"{n} rows cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    classes, counts = np.unique(labels, return_counts=True)
    buckets = [[] for _ in range(k)]
    if counts.min() < k:
        warnings.warn(f"a class has fewer than {k} rows; using unstratified folds",
                      StratificationWarning, stacklevel=2)
        for i, row in enumerate(rng.permutation(n)):
            buckets[i % k].append(int(row))
    else:
        offset = 0
        for c in classes:
            rows = rng.permutation(np.flatnonzero(labels == c))
            for i, row in enumerate(rows):
                buckets[(offset + i) % k].append(int(row))
            offset += rows.size
    return [np.sort(np.array(b, dtype=int)) for b in buckets]


def fold_consistency(predicted, truth, machine_ids, timestamps) -> float:
    """Consistency of predictions ordered by (machine, timestamp).

    Consecutive predictions of the same machine whose true labels are equal
    form the pairs of that label's interval; C is the mean over the labels
    present of 1 - mean squared jump.
    """
    predicted = np.asarray(predicted, dtype=int)
    truth = np.asarray(truth, dtype=int)
    order = sorted(range(predicted.size), key=lambda i: (str(machine_ids[i]), timestamps[i]))
    p, t = predicted[order], truth[order]
    m = np.array([str(machine_ids[i]) for i in order])
    same = (m[1:] == m[:-1]) & (t[1:] == t[:-1])
    jumps = (p[1:] - p[:-1]).astype(float) ** 2
    scores = []
    for label in np.unique(t):
        pairs = same & (t[:-1] == label)
        scores.append(1.0 if not pairs.any() else 1.0 - jumps[pairs].mean())
    return float(np.mean(scores))


def kfold_cv(matrix, labels=None, spec: ModelSpec = None, k=5, seed=0) -> CvReport:
    labels = matrix.labels if labels is None else np.asarray(labels, dtype=int)
    if labels is None:
        raise InvalidInputError("cross-validation needs labels")
    if len(matrix) < k:
        raise InvalidInputError(f"{len(matrix)} rows cannot fill {k} folds")
    folds = fold_assignment(labels, k, seed)
    accs, cs, means = [], [], []
    for i, test in enumerate(folds):
        train = np.setdiff1d(np.arange(len(matrix)), test)
        model = train_model(spec, matrix.take(train), labels[train], seed=seed + i)
        pred = model.predict_values(matrix.values[test])
        accs.append(float(np.mean(pred == labels[test])))
        cs.append(fold_consistency(pred, labels[test],
                                   [matrix.machine_ids[j] for j in test],
                                   matrix.timestamps[test]))
        means.append(model.standardizer.means)
    return CvReport(accs, cs, folds, means)
