"""Feature selection: coefficient-of-variation filter, then forest importance filter.

The final hand-picking from boxplots is not automated; :func:`boxplot_export`
produces the statistics and :func:`top_features` offers a deterministic
stand-in (highest importance first).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import audit
from .classifiers.forest import forest_fit
from .errors import InvalidInputError, InvalidLabelsError
from .io import atomic_write_text

ZERO_MEAN = 1e-12


def coefficients_of_variation(matrix) -> dict:
    """Population std / |mean| per feature; None for features with missing cells."""
    out = {}
    for j, name in enumerate(matrix.names):
        if matrix.missing[:, j].any():
            out[name] = None
            continue
        col = matrix.values[:, j]
        mean = abs(col.mean())
        std = col.std()
        if mean < ZERO_MEAN:
            out[name] = float("inf") if std > 0 else 0.0
        else:
            out[name] = float(std / mean)
    return out


def cv_filter(matrix, threshold: float = 1.0) -> list:
    """Names of features whose CV is at least ``threshold``.

    Features with any missing value are dropped as well.
    """
    if len(matrix) == 0 or not matrix.names:
        raise InvalidInputError("cannot filter an empty matrix")
    audit.record("selection", matrix.keys)
    cvs = coefficients_of_variation(matrix)
    return [n for n in matrix.names if cvs[n] is not None and cvs[n] >= threshold]


def gini_importances(matrix, labels=None, seed: int = 0, n_trees: int = 100) -> dict:
    labels = matrix.labels if labels is None else np.asarray(labels, dtype=int)
    if labels is None or np.unique(labels).size < 2:
        raise InvalidLabelsError("importance ranking needs at least two classes")
    if matrix.missing.any():
        raise InvalidInputError("importance ranking needs a matrix without missing values")
    audit.record("selection", matrix.keys)
    forest = forest_fit(matrix.values, labels, n_trees=n_trees, seed=seed)
    return dict(zip(matrix.names, forest["importances"].tolist()))


def gini_filter(matrix, labels=None, threshold: float = 0.01, seed: int = 0,
                n_trees: int = 100, importances: dict | None = None) -> list:
    if importances is None:
        importances = gini_importances(matrix, labels, seed, n_trees)
    return [n for n in matrix.names if importances[n] >= threshold]


def top_features(names, importances: dict, limit: int | None) -> list:
    """``names`` ordered by decreasing importance (ties by name), cut to ``limit``."""
    ranked = sorted(names, key=lambda n: (-importances[n], n))
    return ranked if limit is None else ranked[:limit]


@dataclass
class SelectionResult:
    cv_retained: list
    gini_retained: list
    selected: list
    importances: dict = field(default_factory=dict)
    cvs: dict = field(default_factory=dict)


def select_features(matrix, labels=None, cv_threshold=1.0, gini_threshold=0.01,
                    max_features=None, seed=0, n_trees=100, pinned=None) -> SelectionResult:
    """CV filter, then importance filter, then an optional cap or a pinned list."""
    after_cv = cv_filter(matrix, cv_threshold)
    if not after_cv:
        raise InvalidInputError("coefficient-of-variation filter removed every feature")
    sub = matrix.select(after_cv)
    imp = gini_importances(sub, labels, seed, n_trees)
    after_gini = gini_filter(sub, threshold=gini_threshold, importances=imp)
    if pinned:
        missing = [n for n in pinned if n not in matrix.names]
        if missing:
            raise InvalidInputError(f"pinned features not in the matrix: {missing}")
        chosen = list(pinned)
    else:
        chosen = top_features(after_gini or after_cv, imp, max_features)
    return SelectionResult(after_cv, after_gini, chosen, imp, coefficients_of_variation(matrix))


@dataclass
class BoxStats:
    feature: str
    label: int
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    outliers: list


@dataclass
class BoxplotExport:
    stats: list
    warnings: list

    def lookup(self, feature, label) -> BoxStats:
        for s in self.stats:
            if s.feature == feature and s.label == label:
                return s
        raise KeyError((feature, label))


def box_stats(values, feature="", label=0) -> BoxStats:
    v = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return BoxStats(feature, int(label), int(v.size), float(v[0]), float(q1), float(med),
                    float(q3), float(v[-1]), float(inside.min()), float(inside.max()),
                    [float(x) for x in v if x < lo_fence or x > hi_fence])


def boxplot_export(matrix, labels=None, classes=None, features=None) -> BoxplotExport:
    """Quartiles (linear interpolation) and 1.5 IQR whiskers per feature and class."""
    labels = matrix.labels if labels is None else np.asarray(labels, dtype=int)
    if labels is None:
        raise InvalidLabelsError("boxplot export needs labels")
    classes = sorted(np.unique(labels).tolist()) if classes is None else list(classes)
    features = matrix.names if features is None else list(features)
    stats, notes = [], []
    for c in classes:
        if not np.any(labels == c):
            notes.append({"label": int(c), "warning": "no rows for this class; omitted"})
    for name in features:
        j = matrix.names.index(name)
        for c in classes:
            rows = (labels == c) & ~matrix.missing[:, j]
            if rows.any():
                stats.append(box_stats(matrix.values[rows, j], name, c))
    return BoxplotExport(stats, notes)


def write_feature_list(path, names, header=None):
    lines = [f"# {header}"] if header else []
    lines.extend(names)
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_feature_list(path) -> list:
    names = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            names.append(line)
    if not names:
        raise InvalidInputError(f"feature list {path} is empty")
    return names
