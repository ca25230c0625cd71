"""Cascade (normal/abnormal, then risky/high-risk) and ternary prognosis models.

Each task (``na``, ``rh``, ``ternary``) gets its own chain on the training
rows: under-sample to the minority class, select features, then train. The
standardizer is fitted inside :func:`~rotorcascade.classifiers.train_model`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import audit
from .classifiers import CvReport, ModelSpec, TrainedModel, kfold_cv, train_model
from .classifiers.model import DISPLAY_NAMES, model_from_dict, model_to_dict
from .errors import FeatureMismatchError, InvalidInputError, InvalidLabelsError
from .metrics import (
    DEFAULT_WEIGHTS,
    HIGH_RISK,
    NORMAL,
    RISKY,
    LoopLayout,
    OpaiReport,
    PredictionSeries,
    consistency,
    multi_loop_opai,
    opai,
)
from .selection import SelectionResult, select_features

DAY = 86400.0
RISKY_WINDOW = 30 * DAY
HIGH_RISK_WINDOW = 1 * DAY

TASKS = ("na", "rh", "ternary")


@dataclass
class MachineTimeline:
    machine_id: str
    timestamps: list
    failure_time: float | None = None
    downtime_end: float | None = None

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        if np.any(np.diff(ts) <= 0):
            raise InvalidInputError(f"{self.machine_id}: timestamps must strictly increase")
        if self.failure_time is not None and ts.size and ts[-1] > self.failure_time:
            raise InvalidInputError(f"{self.machine_id}: observation after the failure time")


def label_timeline(timeline: MachineTimeline) -> list:
    """Normal / risky (last 30 days) / high-risk (last day) before the failure."""
    if timeline.failure_time is None:
        return [NORMAL] * len(timeline.timestamps)
    t_b = timeline.failure_time - RISKY_WINDOW
    t_c = timeline.failure_time - HIGH_RISK_WINDOW
    out = []
    for t in timeline.timestamps:
        if t >= t_c:
            out.append(HIGH_RISK)
        elif t >= t_b:
            out.append(RISKY)
        else:
            out.append(NORMAL)
    return out


def na_labels(labels) -> np.ndarray:
    """0 = normal, 1 = abnormal (risky or high-risk)."""
    return (np.asarray(labels) > NORMAL).astype(int)


# splitting and balancing

def split_by_machine(matrix, train_ids, test_ids):
    known = set(matrix.machine_ids)
    unknown = [m for m in list(train_ids) + list(test_ids) if m not in known]
    if unknown:
        raise InvalidInputError(f"unknown machine ids: {unknown}")
    overlap = set(train_ids) & set(test_ids)
    if overlap:
        raise InvalidInputError(f"machines on both sides of the split: {sorted(overlap)}")
    ids = np.array(matrix.machine_ids)
    train = np.flatnonzero(np.isin(ids, list(train_ids)))
    test = np.flatnonzero(np.isin(ids, list(test_ids)))
    return matrix.take(train), matrix.take(test)


def split_stratified(matrix, fraction=0.8, seed=0):
    if matrix.labels is None:
        raise InvalidLabelsError("stratified split needs labels")
    if not 0 < fraction < 1:
        raise InvalidInputError("fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train = []
    for c in np.unique(matrix.labels):
        rows = rng.permutation(np.flatnonzero(matrix.labels == c))
        train.extend(rows[:int(round(fraction * rows.size))].tolist())
    train = np.sort(np.array(train, dtype=int))
    test = np.setdiff1d(np.arange(len(matrix)), train)
    return matrix.take(train), matrix.take(test)


def split(matrix, strategy="by_machine", train_ids=None, test_ids=None, fraction=0.8, seed=0):
    if strategy == "by_machine":
        return split_by_machine(matrix, train_ids, test_ids)
    if strategy == "stratified":
        return split_stratified(matrix, fraction, seed)
    raise InvalidInputError(f"unknown split strategy {strategy!r}")


def undersample(matrix, labels=None, seed=0):
    """Randomly keep minority-count rows of every class (original order kept)."""
    labels = matrix.labels if labels is None else np.asarray(labels, dtype=int)
    classes, counts = np.unique(labels, return_counts=True)
    if classes.size < 2:
        raise InvalidLabelsError("under-sampling needs at least two non-empty classes")
    audit.record("undersample", matrix.keys)
    rng = np.random.default_rng(seed)
    keep = []
    for c in classes:
        rows = np.flatnonzero(labels == c)
        keep.extend(rng.choice(rows, size=counts.min(), replace=False).tolist())
    keep = np.sort(np.array(keep, dtype=int))
    return matrix.take(keep).with_labels(labels[keep])


# configuration of one experiment

@dataclass
class PipelineConfig:
    cv_threshold: float = 1.0
    gini_threshold: float = 0.01
    selection_trees: int = 100
    max_features: dict = field(default_factory=lambda: {"na": 12, "rh": 12, "ternary": 14})
    pinned: dict = field(default_factory=dict)
    algo_params: dict = field(default_factory=dict)
    cv_folds: int = 5
    weights: tuple = DEFAULT_WEIGHTS
    seed: int = 0

    def spec(self, algo) -> ModelSpec:
        return ModelSpec(algo, dict(self.algo_params.get(algo, {})))


def derive_seed(master: int, *labels) -> int:
    """Stable child seed for a named purpose (no Python hash randomization)."""
    import zlib

    words = [int(master)] + [zlib.crc32(str(x).encode()) for x in labels]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


@dataclass
class StageData:
    task: str
    matrix: object
    selection: SelectionResult

    @property
    def features(self) -> list:
        return list(self.selection.selected)


def task_rows(train, task):
    """Rows and labels the given task trains on."""
    if train.labels is None:
        raise InvalidLabelsError("training rows must be labelled")
    if task == "na":
        return train.with_labels(na_labels(train.labels))
    if task == "rh":
        rows = np.flatnonzero(train.labels > NORMAL)
        if rows.size == 0:
            raise InvalidLabelsError("no abnormal rows: the risky/high-risk stage cannot be trained")
        return train.take(rows)
    if task == "ternary":
        return train
    raise InvalidInputError(f"unknown task {task!r}")


def prepare_stage(train, task, config: PipelineConfig) -> StageData:
    rows = task_rows(train, task)
    if np.unique(rows.labels).size < 2:
        raise InvalidLabelsError(f"task {task} has a single class in the training rows")
    balanced = undersample(rows, seed=derive_seed(config.seed, "undersample", task))
    result = select_features(
        balanced, cv_threshold=config.cv_threshold, gini_threshold=config.gini_threshold,
        max_features=config.max_features.get(task), seed=derive_seed(config.seed, "gini", task),
        n_trees=config.selection_trees, pinned=config.pinned.get(task))
    return StageData(task, balanced.select(result.selected), result)


def train_stage(stage: StageData, algo, config: PipelineConfig) -> TrainedModel:
    return train_model(config.spec(algo), stage.matrix,
                       seed=derive_seed(config.seed, "train", stage.task, algo))


def cv_stage(stage: StageData, algo, config: PipelineConfig) -> CvReport:
    return kfold_cv(stage.matrix, spec=config.spec(algo), k=config.cv_folds,
                    seed=derive_seed(config.seed, "cv", stage.task, algo))


# cascade model

@dataclass
class CascadeModel:
    na_model: TrainedModel
    rh_model: TrainedModel
    stage2_rows: int = field(default=0, compare=False)

    @property
    def na_feature_list(self):
        return list(self.na_model.feature_names)

    @property
    def rh_feature_list(self):
        return list(self.rh_model.feature_names)

    @property
    def name(self) -> str:
        return f"{DISPLAY_NAMES[self.na_model.variant]}+{DISPLAY_NAMES[self.rh_model.variant]}"

    def predict(self, matrix) -> np.ndarray:
        """Stage 2 only runs on rows stage 1 calls abnormal."""
        abnormal = self.na_model.predict(matrix) == 1
        out = np.zeros(len(matrix), dtype=int)
        rows = np.flatnonzero(abnormal)
        if rows.size:
            self.stage2_rows += rows.size
            audit.count("stage2")
            out[rows] = self.rh_model.predict(matrix.take(rows))
        return out

    def predict_row(self, names, values) -> int:
        row = dict(zip(names, values))
        try:
            na = [row[n] for n in self.na_feature_list]
            first = self.na_model.predict_values([na])[0]
            if first != 1:
                return NORMAL
            self.stage2_rows += 1
            rh = [row[n] for n in self.rh_feature_list]
        except KeyError as exc:
            raise FeatureMismatchError(f"row lacks feature {exc.args[0]}") from None
        return int(self.rh_model.predict_values([rh])[0])


def train_cascade(train, na_algo, rh_algo, config: PipelineConfig = None, stages=None) -> CascadeModel:
    config = config or PipelineConfig()
    stages = stages or {}
    na = stages.get("na") or prepare_stage(train, "na", config)
    rh = stages.get("rh") or prepare_stage(train, "rh", config)
    return CascadeModel(train_stage(na, na_algo, config), train_stage(rh, rh_algo, config))


def train_ternary(train, algo, config: PipelineConfig = None, stages=None) -> TrainedModel:
    config = config or PipelineConfig()
    stage = (stages or {}).get("ternary") or prepare_stage(train, "ternary", config)
    return train_stage(stage, algo, config)


def model_name(model) -> str:
    if isinstance(model, CascadeModel):
        return model.name
    return DISPLAY_NAMES[model.variant]


def predict(model, matrix) -> np.ndarray:
    return model.predict(matrix)


def cascade_to_json(model: CascadeModel) -> str:
    doc = {"format": "rotorcascade-cascade", "version": 1,
           "na_model": model_to_dict(model.na_model), "rh_model": model_to_dict(model.rh_model)}
    return json.dumps(doc, sort_keys=True, allow_nan=False)


def cascade_from_json(text: str) -> CascadeModel:
    doc = json.loads(text)
    if doc.get("format") != "rotorcascade-cascade":
        raise InvalidInputError("not a serialized cascade model")
    return CascadeModel(model_from_dict(doc["na_model"]), model_from_dict(doc["rh_model"]))


# evaluation

@dataclass
class MachineScore:
    machine_id: str
    faulty: bool
    n: int
    accuracy: float
    s: float | None
    c: float
    c1: float
    c2: float | None
    c3: float | None


@dataclass
class Evaluation:
    machines: list
    pooled: OpaiReport
    predictions: list

    def machine(self, machine_id) -> MachineScore:
        return next(m for m in self.machines if m.machine_id == machine_id)


def score_predictions(loop_ids, timestamps, truth, predicted, weights=DEFAULT_WEIGHTS) -> Evaluation:
    """Score each loop's timestamp-ordered predictions.

    Loops that reach risky or high-risk are scored with S and C; loops that
    stay normal (healthy machines) only get accuracy and the normal-interval
    consistency. Pooled accuracy covers all rows; pooled S and C average the
    deteriorating loops.
    """
    ids = np.array([str(x) for x in loop_ids])
    timestamps = np.asarray(timestamps, dtype=float)
    truth = np.asarray(truth, dtype=int)
    predicted = np.asarray(predicted, dtype=int)
    if not (ids.size == timestamps.size == truth.size == predicted.size) or ids.size == 0:
        raise InvalidInputError("loop ids, timestamps, truth and predictions must align and be non-empty")
    machines, loops, predictions = [], [], []
    for mid in dict.fromkeys(ids.tolist()):
        rows = np.flatnonzero(ids == mid)
        rows = rows[np.argsort(timestamps[rows], kind="stable")]
        t, p = truth[rows], predicted[rows]
        predictions.extend((mid, float(timestamps[r]), int(a), int(b)) for r, a, b in zip(rows, t, p))
        acc = float(np.mean(t == p))
        if np.any(t > NORMAL):
            series = PredictionSeries(t, p, LoopLayout.from_truth(t))
            rep = opai(series, weights)
            loops.append(series)
            machines.append(MachineScore(mid, True, rows.size, acc, rep.s, rep.c,
                                         rep.c1, rep.c2, rep.c3))
        else:
            c1 = consistency(p)
            machines.append(MachineScore(mid, False, rows.size, acc, None, c1, c1, None, None))
    accuracy = float(np.mean(predicted == truth))
    if loops:
        rep = multi_loop_opai(loops, weights)
        pooled = OpaiReport(accuracy, rep.s, rep.c, rep.c1, rep.c2, rep.c3)
    else:
        c = float(np.mean([m.c for m in machines]))
        pooled = OpaiReport(accuracy, math.nan, c, c, math.nan, math.nan)
    return Evaluation(machines, pooled, predictions)


def evaluate(model, test, weights=DEFAULT_WEIGHTS) -> Evaluation:
    """Predict every test row and score each machine as one loop."""
    if test.labels is None:
        raise InvalidLabelsError("evaluation needs labelled test rows")
    return score_predictions(test.machine_ids, test.timestamps, test.labels,
                             model.predict(test), weights)


# model selection

@dataclass
class Candidate:
    name: str
    kind: str
    model: object
    cv: dict = field(default_factory=dict)
    train_eval: Evaluation | None = None
    test_eval: Evaluation | None = None

    def score(self, which="test") -> OpaiReport:
        ev = self.test_eval if which == "test" else self.train_eval
        return ev.pooled


def select_model(candidates) -> list:
    """Rank by test S, then test C, then test accuracy (all descending)."""
    candidates = list(candidates)
    if not candidates:
        raise InvalidInputError("no candidates to rank")

    def key(c):
        p = c.score("test")
        s = -math.inf if math.isnan(p.s) else p.s
        return (-s, -p.c, -p.accuracy)

    return sorted(candidates, key=key)
