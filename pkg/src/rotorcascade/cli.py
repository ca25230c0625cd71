"""Command-line driver: datagen, featurize, select-features, train, evaluate, score, report.

Every command reads the same TOML config (``--config``, defaults otherwise).
Failures print one JSON line ``{"error": <code>, "message": ..., ...}`` on
stderr and exit with status 1.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import cascade as cas
from . import experiment as exp
from . import plotting
from .classifiers.model import DISPLAY_NAMES, model_from_dict, model_to_dict
from .config import DEFAULT_TOML, load_config
from .datagen import generate_fleet
from .errors import InvalidInputError, MalformedCSVError, RotorError
from .features import featurize_arrays
from .io import (
    atomic_write_text,
    fmt_float,
    prediction_csv_text,
    read_feature_csv,
    read_prediction_csv,
    read_table_csv,
    read_wave_bundle,
    table_csv_text,
    write_feature_csv,
    write_wave_bundle,
)
from .selection import boxplot_export, read_feature_list, write_feature_list

MANIFEST = "machines.csv"
MANIFEST_COLUMNS = ["machine_id", "faulty", "failure_time", "waves"]
SCORE_REPORT_COLUMNS = ["loop_id", "n", "accuracy", "s", "c", "c1", "c2", "c3"]


# helpers shared by several commands

def _split(cfg, matrix):
    if cfg.split == "by_machine":
        return cas.split_by_machine(matrix, cfg.train_ids, cfg.test_ids)
    return cas.split_stratified(matrix, cfg.fraction, cfg.seed_for("split"))


def _load_split(args):
    cfg = load_config(args.config)
    matrix = read_feature_csv(args.features)
    if matrix.labels is None:
        raise InvalidInputError(f"{args.features}: training needs a labelled feature table")
    train, test = _split(cfg, matrix)
    return cfg, train, test


def _feature_file(directory, task) -> Path:
    return Path(directory) / f"features_{task}.txt"


def _pinned(cfg, feature_dir):
    """Feature lists per task: ``--feature-dir`` first, then config pins."""
    out = {}
    for task in cas.TASKS:
        path = None
        if feature_dir is not None and _feature_file(feature_dir, task).exists():
            path = _feature_file(feature_dir, task)
        elif task in cfg.pinned_files:
            path = cfg.base_dir / cfg.pinned_files[task]
        if path is not None:
            if not Path(path).exists():
                raise InvalidInputError(f"missing file: {path}")
            out[task] = read_feature_list(path)
    return out


def _slug(name) -> str:
    return name.replace("+", "_")


def _model_doc(candidate) -> dict:
    if candidate.kind == "cascade":
        return json.loads(cas.cascade_to_json(candidate.model))
    return model_to_dict(candidate.model)


def _load_candidate(name, kind, path) -> cas.Candidate:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"missing file: {path}")
    text = path.read_text(encoding="utf-8")
    model = cas.cascade_from_json(text) if kind == "cascade" else model_from_dict(json.loads(text))
    return cas.Candidate(name, kind, model)


def _dump_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, allow_nan=False) + "\n"


# commands

def cmd_datagen(args):
    cfg = load_config(args.config)
    fleet = generate_fleet(cfg.n_faulty, cfg.n_healthy, cfg.counts, cfg.seed_for("datagen"))
    out = Path(args.out)
    rows = []
    for rec in fleet:
        write_wave_bundle(out / f"waves_{rec.machine_id}.csv", rec.arrays)
        failure = rec.timeline.failure_time
        rows.append([rec.machine_id, int(rec.faulty), "" if failure is None else fmt_float(failure),
                     f"waves_{rec.machine_id}.csv"])
    atomic_write_text(out / MANIFEST, table_csv_text(MANIFEST_COLUMNS, rows))
    print(f"wrote {len(fleet)} machines to {out}")


def _read_manifest(directory):
    path = Path(directory) / MANIFEST
    rows = read_table_csv(path)
    for i, row in enumerate(rows, start=2):
        if set(MANIFEST_COLUMNS) - set(row):
            raise MalformedCSVError(f"{path}:1: missing manifest columns", path, 1)
        if row["faulty"] not in ("0", "1"):
            raise MalformedCSVError(f"{path}:{i}: faulty must be 0 or 1", path, i)
    return rows


def cmd_featurize(args):
    cfg = load_config(args.config)
    waves_dir = Path(args.waves)
    arrays, labels = [], []
    for row in _read_manifest(waves_dir):
        bundle = read_wave_bundle(waves_dir / row["waves"])
        stamps = [w[0].timestamp for w in bundle]
        if any(w[0].machine_id != row["machine_id"] for w in bundle):
            raise InvalidInputError(f"{row['waves']}: rows of another machine present")
        failure = float(row["failure_time"]) if row["failure_time"] else None
        order = np.argsort(stamps, kind="stable")
        bundle = [bundle[i] for i in order]
        timeline = cas.MachineTimeline(row["machine_id"], [stamps[i] for i in order], failure)
        arrays.extend(bundle)
        labels.extend(cas.label_timeline(timeline))
    matrix = featurize_arrays(arrays, labels, denoise=cfg.denoise)
    write_feature_csv(args.out, matrix)
    print(f"wrote {len(matrix)} rows x {len(matrix.names)} features to {args.out}")


def cmd_select(args):
    cfg, train, _ = _load_split(args)
    pcfg = cfg.pipeline(_pinned(cfg, None))
    out = Path(args.out)
    for task in cas.TASKS:
        stage = cas.prepare_stage(train, task, pcfg)
        sel = stage.selection
        write_feature_list(_feature_file(out, task), sel.selected,
                           f"{task}: {len(sel.cv_retained)} after CV filter, "
                           f"{len(sel.gini_retained)} after importance filter")
        export = boxplot_export(stage.matrix, features=sel.selected)
        rows = [[s.feature, s.label, s.n, s.min, s.q1, s.median, s.q3, s.max,
                 s.whisker_low, s.whisker_high, len(s.outliers)] for s in export.stats]
        atomic_write_text(out / f"boxplot_{task}.csv", table_csv_text(
            ["feature", "label", "n", "min", "q1", "median", "q3", "max",
             "whisker_low", "whisker_high", "outliers"], rows))
        ranking = [[n, sel.cvs[n], sel.importances.get(n)] for n in stage.selection.cv_retained]
        atomic_write_text(out / f"ranking_{task}.csv",
                          table_csv_text(["feature", "cv", "importance"], ranking))
        print(f"{task}: {len(sel.selected)} features -> {_feature_file(out, task)}")


def cmd_train(args):
    cfg, train, _ = _load_split(args)
    pcfg = cfg.pipeline(_pinned(cfg, args.feature_dir))
    kinds = ("cascade", "ternary") if args.kind == "all" else (args.kind,)
    tasks = {"all": cas.TASKS, "cascade": ("na", "rh"), "ternary": ("ternary",)}[args.kind]
    stages = {t: cas.prepare_stage(train, t, pcfg) for t in tasks}
    out = Path(args.out)
    cv = exp.run_cv(stages, pcfg, cfg.algorithms)
    atomic_write_text(out / "cv_grid.csv", exp.cv_grid_text(cv))
    candidates = exp.train_candidates(train, pcfg, stages, cfg.algorithms, kinds)
    index = []
    for c in candidates:
        name = f"{c.kind}_{_slug(c.name)}.json"
        atomic_write_text(out / name, _dump_json(_model_doc(c)))
        index.append([c.name, c.kind, name])
    atomic_write_text(out / "models.csv", table_csv_text(["model", "kind", "file"], index))
    print(f"trained {len(candidates)} models into {out}")


def cmd_evaluate(args):
    cfg, train, test = _load_split(args)
    models = Path(args.models)
    candidates = [_load_candidate(r["model"], r["kind"], models / r["file"])
                  for r in read_table_csv(models / "models.csv")]
    ranked = exp.evaluate_candidates(candidates, train, test, cfg.weights)
    out = Path(args.out)
    atomic_write_text(out / "score_grid.csv", exp.score_grid_text(ranked))
    atomic_write_text(out / "machine_scores.csv", exp.machine_grid_text(ranked))
    best = ranked[0]
    atomic_write_text(out / "best_model.json", _dump_json(_model_doc(best)))
    atomic_write_text(out / "best_predictions.csv", prediction_csv_text(best.test_eval.predictions))
    p = best.score("test")
    print(f"best: {best.name} ({best.kind}) test accuracy={p.accuracy:.4f} S={p.s:.4f} C={p.c:.4f}")


def cmd_score(args):
    cfg = load_config(args.config)
    weights = cfg.weights if args.weights is None else tuple(float(x) for x in args.weights.split(","))
    if len(weights) != 3:
        raise InvalidInputError("--weights needs three comma-separated numbers")
    records = read_prediction_csv(args.predictions)
    ids, stamps, truth, pred = zip(*records)
    ev = cas.score_predictions(ids, stamps, truth, pred, weights)
    rows = [[m.machine_id, m.n, m.accuracy, m.s, m.c, m.c1, m.c2, m.c3] for m in ev.machines]
    p = ev.pooled
    rows.append(["pooled", sum(m.n for m in ev.machines), p.accuracy,
                 None if np.isnan(p.s) else p.s, p.c, p.c1,
                 None if np.isnan(p.c2) else p.c2, None if np.isnan(p.c3) else p.c3])
    text = table_csv_text(SCORE_REPORT_COLUMNS, rows)
    if args.out:
        atomic_write_text(args.out, text)
    for r in rows:
        s = "n/a" if r[3] is None else f"{r[3]:.6f}"
        print(f"{r[0]}: n={r[1]} accuracy={r[2]:.6f} S={s} C={r[4]:.6f}")


def cmd_report(args):
    cfg = load_config(args.config)
    results = Path(args.results)
    grid = read_table_csv(results / "score_grid.csv")
    for r in grid:
        for k in exp.SCORE_COLUMNS[3:]:
            r[k] = float(r[k]) if r[k] not in ("", None) else float("nan")
    out = Path(args.out)
    plotting.save_svg(plotting.score_boxplots(grid), out / "test_score_boxplots.svg")
    plotting.save_svg(plotting.grouped_bars(grid, [DISPLAY_NAMES[a] for a in cfg.algorithms]),
                      out / "grouped_scores.svg")
    header = exp.SCORE_COLUMNS
    plotting.save_svg(plotting.ranked_table(header, [[r[h] for h in header] for r in grid]),
                      out / "ranked_models.svg")
    atomic_write_text(out / "ranked_models.csv", table_csv_text(header, [[r[h] for h in header] for r in grid]))
    if args.features:
        _, train, _ = _load_split(args)
        for task in cas.TASKS:
            path = _feature_file(args.feature_dir or results, task)
            if not path.exists():
                continue
            rows = cas.task_rows(train, task)
            names = read_feature_list(path)
            export = boxplot_export(rows.select(names))
            plotting.save_svg(plotting.feature_boxplots(export, task), out / f"boxplots_{task}.svg")
    print(f"wrote report figures to {out}")


def cmd_pipeline(args):
    """datagen -> featurize -> select-features -> train -> evaluate -> report in one directory."""
    out = Path(args.out)
    ns = argparse.Namespace
    cmd_datagen(ns(config=args.config, out=out / "waves"))
    cmd_featurize(ns(config=args.config, waves=out / "waves", out=out / "features.csv"))
    common = dict(config=args.config, features=out / "features.csv")
    cmd_select(ns(**common, out=out / "selection"))
    cmd_train(ns(**common, feature_dir=out / "selection", kind="all", out=out / "models"))
    cmd_evaluate(ns(**common, models=out / "models", out=out / "results"))
    cmd_report(ns(**common, results=out / "results", feature_dir=out / "selection",
                  out=out / "report"))


def cmd_config(args):
    sys.stdout.write(DEFAULT_TOML)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rotorcascade", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML config (defaults when omitted)")
        p.set_defaults(func=func)
        return p

    p = add("datagen", cmd_datagen, "write a synthetic fleet as wave-bundle CSVs")
    p.add_argument("--out", required=True, help="output directory")

    p = add("featurize", cmd_featurize, "denoise, extract and assemble the feature table")
    p.add_argument("--waves", required=True, help=f"directory with {MANIFEST} and wave bundles")
    p.add_argument("--out", required=True, help="feature CSV to write")

    p = add("select-features", cmd_select, "write retained-feature lists for na / rh / ternary")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = add("train", cmd_train, "train cascade and/or ternary models")
    p.add_argument("--features", required=True)
    p.add_argument("--feature-dir", help="directory with features_<task>.txt lists to pin")
    p.add_argument("--kind", choices=("all", "cascade", "ternary"), default="all")
    p.add_argument("--out", required=True, help="model directory")

    p = add("evaluate", cmd_evaluate, "score trained models on the train and test splits")
    p.add_argument("--features", required=True)
    p.add_argument("--models", required=True, help="directory written by train")
    p.add_argument("--out", required=True, help="results directory")

    p = add("score", cmd_score, "accuracy, S and C per loop for a prediction CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("--weights", help="w1,w2,w3 (default from config)")
    p.add_argument("--out", help="CSV report to write")

    p = add("report", cmd_report, "SVG figures and ranked table from evaluation results")
    p.add_argument("--results", required=True, help="directory written by evaluate")
    p.add_argument("--features", help="feature CSV, enables per-feature boxplots")
    p.add_argument("--feature-dir", help="directory with features_<task>.txt lists")
    p.add_argument("--out", required=True, help="figure directory")

    p = add("pipeline", cmd_pipeline, "run every step into one directory")
    p.add_argument("--out", required=True)

    add("config", cmd_config, "print the default config")
    return parser


def _error_line(exc) -> str:
    doc = {"error": getattr(exc, "code", "error"), "message": str(exc)}
    if isinstance(exc, MalformedCSVError):
        if exc.path is not None:
            doc["path"] = str(exc.path)
        if exc.line is not None:
            doc["line"] = exc.line
    return json.dumps(doc, sort_keys=True)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except RotorError as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
