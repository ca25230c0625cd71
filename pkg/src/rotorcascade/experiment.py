"""The comparison experiment: per-task CV, 9 cascades vs 3 ternary models.

Feature selection runs once per task; every candidate reuses it. Candidates
only depend on named child seeds, so their training order does not matter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cascade as cas
from .classifiers.model import ALGORITHMS, DISPLAY_NAMES
from .io import table_csv_text

CV_COLUMNS = ["task", "algorithm", "cv_accuracy", "cv_c"]
SCORE_COLUMNS = ["rank", "model", "kind", "train_accuracy", "train_s", "train_c",
                 "test_accuracy", "test_s", "test_c"]
MACHINE_COLUMNS = ["model", "machine_id", "faulty", "n", "accuracy", "s", "c", "c1", "c2", "c3"]


@dataclass
class ExperimentResult:
    stages: dict
    cv: dict
    ranked: list

    def candidate(self, name) -> cas.Candidate:
        return next(c for c in self.ranked if c.name == name)

    def of_kind(self, kind) -> list:
        return [c for c in self.ranked if c.kind == kind]

    def median_test_s(self, kind) -> float:
        return float(np.median([c.score("test").s for c in self.of_kind(kind)]))


def train_candidates(train, config: cas.PipelineConfig, stages, algorithms=ALGORITHMS,
                     kinds=("cascade", "ternary")) -> list:
    candidates = []
    if "cascade" in kinds:
        for a in algorithms:
            for b in algorithms:
                model = cas.train_cascade(train, a, b, config, stages)
                candidates.append(cas.Candidate(model.name, "cascade", model))
    if "ternary" in kinds:
        for a in algorithms:
            model = cas.train_ternary(train, a, config, stages)
            candidates.append(cas.Candidate(DISPLAY_NAMES[a], "ternary", model))
    return candidates


def evaluate_candidates(candidates, train, test, weights) -> list:
    """Re-test on the training rows, test on held-out rows, then rank."""
    for c in candidates:
        c.train_eval = cas.evaluate(c.model, train, weights)
        c.test_eval = cas.evaluate(c.model, test, weights)
    return cas.select_model(candidates)


def run_cv(stages, config, algorithms=ALGORITHMS) -> dict:
    return {task: {a: cas.cv_stage(stages[task], a, config) for a in algorithms}
            for task in cas.TASKS if task in stages}


def run_experiment(train, test, config: cas.PipelineConfig = None, algorithms=ALGORITHMS,
                   with_cv: bool = True, stages=None) -> ExperimentResult:
    config = config or cas.PipelineConfig()
    stages = stages or {task: cas.prepare_stage(train, task, config) for task in cas.TASKS}
    cv = run_cv(stages, config, algorithms) if with_cv else {}
    candidates = train_candidates(train, config, stages, algorithms)
    return ExperimentResult(stages, cv, evaluate_candidates(candidates, train, test, config.weights))


def cv_rows(cv: dict) -> list:
    rows = []
    for task in cas.TASKS:
        for algo, rep in cv.get(task, {}).items():
            rows.append([task, DISPLAY_NAMES[algo], rep.mean_accuracy, rep.mean_c])
    return rows


def score_rows(ranked) -> list:
    rows = []
    for rank, c in enumerate(ranked, start=1):
        tr, te = c.score("train"), c.score("test")
        rows.append([rank, c.name, c.kind, tr.accuracy, tr.s, tr.c, te.accuracy, te.s, te.c])
    return rows


def machine_rows(ranked) -> list:
    rows = []
    for c in ranked:
        for m in c.test_eval.machines:
            rows.append([c.name, m.machine_id, int(m.faulty), m.n, m.accuracy,
                         m.s, m.c, m.c1, m.c2, m.c3])
    return rows


def _rounded(rows, digits=10):
    # round floats so grids are stable text across platforms
    return [[round(v, digits) if isinstance(v, float) else v for v in r] for r in rows]


def cv_grid_text(cv) -> str:
    return table_csv_text(CV_COLUMNS, _rounded(cv_rows(cv)))


def score_grid_text(ranked) -> str:
    return table_csv_text(SCORE_COLUMNS, _rounded(score_rows(ranked)))


def machine_grid_text(ranked) -> str:
    return table_csv_text(MACHINE_COLUMNS, _rounded(machine_rows(ranked)))


def grid_records(ranked) -> list:
    """Score-grid rows as dicts, the shape :mod:`rotorcascade.plotting` reads."""
    return [dict(zip(SCORE_COLUMNS, r)) for r in score_rows(ranked)]
