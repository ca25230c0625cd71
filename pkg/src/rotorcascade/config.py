"""Experiment configuration read from a TOML file.

Every key is optional; missing keys take the defaults below. ``seed`` at the
top level is the only source of randomness, child seeds are derived from it
by name (see :func:`rotorcascade.cascade.derive_seed`).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cascade import PipelineConfig, derive_seed
from .classifiers.model import ALGORITHMS, DEFAULT_PARAMS
from .datagen import DEFAULT_COUNTS
from .errors import InvalidInputError
from .metrics import DEFAULT_WEIGHTS

DEFAULT_TRAIN_IDS = ("M1", "M2", "M3", "M4", "M5", "M8", "M9", "M10", "M11", "M12")
DEFAULT_TEST_IDS = ("M6", "M7", "M13", "M14")

DEFAULT_TOML = """\
seed = 0

[data]
n_faulty = 7
n_healthy = 7
counts = [35, 24, 21, 70]    # faulty normal, risky, high-risk; healthy normal

[features]
denoise = true

[selection]
cv_threshold = 1.0
gini_threshold = 0.01
n_trees = 100
max_features = { na = 12, rh = 12, ternary = 14 }
# pinned = { na = "features_na.txt" }

[classifiers]
knn = { k = 5 }
forest = { n_trees = 100, max_features = "sqrt" }
mlp = { hidden = 32, epochs = 500, lr = 0.1 }
cv_folds = 5

[cascade]
split = "by_machine"
train_ids = ["M1", "M2", "M3", "M4", "M5", "M8", "M9", "M10", "M11", "M12"]
test_ids = ["M6", "M7", "M13", "M14"]
fraction = 0.8
algorithms = ["knn", "forest", "mlp"]

[metrics]
weights = [0.2, 0.3, 0.5]
"""

_SECTIONS = {"seed", "data", "features", "selection", "classifiers", "cascade", "metrics"}


@dataclass
class ExperimentConfig:
    seed: int = 0
    n_faulty: int = 7
    n_healthy: int = 7
    counts: tuple = DEFAULT_COUNTS
    denoise: bool = True
    cv_threshold: float = 1.0
    gini_threshold: float = 0.01
    selection_trees: int = 100
    max_features: dict = field(default_factory=lambda: {"na": 12, "rh": 12, "ternary": 14})
    pinned_files: dict = field(default_factory=dict)
    algo_params: dict = field(default_factory=lambda: {a: dict(p) for a, p in DEFAULT_PARAMS.items()})
    cv_folds: int = 5
    split: str = "by_machine"
    train_ids: tuple = DEFAULT_TRAIN_IDS
    test_ids: tuple = DEFAULT_TEST_IDS
    fraction: float = 0.8
    algorithms: tuple = ALGORITHMS
    weights: tuple = DEFAULT_WEIGHTS
    base_dir: Path = Path(".")

    def seed_for(self, *labels) -> int:
        return derive_seed(self.seed, *labels)

    def pipeline(self, pinned=None) -> PipelineConfig:
        """The training-side settings; ``pinned`` maps task -> feature names."""
        return PipelineConfig(
            cv_threshold=self.cv_threshold, gini_threshold=self.gini_threshold,
            selection_trees=self.selection_trees, max_features=dict(self.max_features),
            pinned=dict(pinned or {}), algo_params={a: dict(p) for a, p in self.algo_params.items()},
            cv_folds=self.cv_folds, weights=tuple(self.weights), seed=self.seed)


def _get(table, key, kind, default):
    if key not in table:
        return default
    value = table[key]
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is tuple:
            return tuple(value)
        return kind(value)
    except (TypeError, ValueError):
        raise InvalidInputError(f"config key {key!r}: cannot read {value!r}") from None


def config_from_dict(doc: dict, base_dir=".") -> ExperimentConfig:
    unknown = set(doc) - _SECTIONS
    if unknown:
        raise InvalidInputError(f"unknown config sections: {sorted(unknown)}")
    cfg = ExperimentConfig(base_dir=Path(base_dir))
    cfg.seed = _get(doc, "seed", int, cfg.seed)
    data = doc.get("data", {})
    cfg.n_faulty = _get(data, "n_faulty", int, cfg.n_faulty)
    cfg.n_healthy = _get(data, "n_healthy", int, cfg.n_healthy)
    cfg.counts = tuple(int(c) for c in _get(data, "counts", tuple, cfg.counts))
    if len(cfg.counts) != 4:
        raise InvalidInputError("data.counts needs four entries")
    cfg.denoise = _get(doc.get("features", {}), "denoise", bool, cfg.denoise)

    sel = doc.get("selection", {})
    cfg.cv_threshold = _get(sel, "cv_threshold", float, cfg.cv_threshold)
    cfg.gini_threshold = _get(sel, "gini_threshold", float, cfg.gini_threshold)
    cfg.selection_trees = _get(sel, "n_trees", int, cfg.selection_trees)
    cfg.max_features.update({k: (None if v in (0, None) else int(v))
                             for k, v in sel.get("max_features", {}).items()})
    cfg.pinned_files = {k: str(v) for k, v in sel.get("pinned", {}).items()}
    for table in (cfg.max_features, cfg.pinned_files):
        bad = set(table) - {"na", "rh", "ternary"}
        if bad:
            raise InvalidInputError(f"unknown selection tasks: {sorted(bad)}")

    cls = doc.get("classifiers", {})
    for algo in ALGORITHMS:
        params = cls.get(algo, {})
        unknown = set(params) - set(DEFAULT_PARAMS[algo])
        if unknown:
            raise InvalidInputError(f"unknown {algo} parameters: {sorted(unknown)}")
        cfg.algo_params[algo].update(params)
    cfg.cv_folds = _get(cls, "cv_folds", int, cfg.cv_folds)

    cas = doc.get("cascade", {})
    cfg.split = _get(cas, "split", str, cfg.split)
    if cfg.split not in ("by_machine", "stratified"):
        raise InvalidInputError(f"cascade.split must be by_machine or stratified, not {cfg.split!r}")
    cfg.train_ids = _get(cas, "train_ids", tuple, cfg.train_ids)
    cfg.test_ids = _get(cas, "test_ids", tuple, cfg.test_ids)
    cfg.fraction = _get(cas, "fraction", float, cfg.fraction)
    cfg.algorithms = _get(cas, "algorithms", tuple, cfg.algorithms)
    bad = [a for a in cfg.algorithms if a not in ALGORITHMS]
    if bad or not cfg.algorithms:
        raise InvalidInputError(f"cascade.algorithms must be drawn from {ALGORITHMS}")

    w = _get(doc.get("metrics", {}), "weights", tuple, cfg.weights)
    if len(w) != 3:
        raise InvalidInputError("metrics.weights needs three entries")
    cfg.weights = tuple(float(x) for x in w)
    return cfg


def load_config(path=None) -> ExperimentConfig:
    """Read ``path`` (defaults only when None)."""
    if path is None:
        return config_from_dict(tomllib.loads(DEFAULT_TOML))
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"missing file: {path}")
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None
    return config_from_dict(doc, path.parent)
