"""SVG figures for the report command.

Figures are built on bare :class:`matplotlib.figure.Figure` objects (no
pyplot state) and written with a fixed hash salt and no date, so the same
inputs give byte-identical files.
"""
from __future__ import annotations

import io
import math

import matplotlib
from matplotlib.figure import Figure

from .io import atomic_write_text

CLASS_NAMES = {0: "Normal", 1: "Risky", 2: "High-risk"}
TASK_CLASSES = {"na": {0: "Normal", 1: "Abnormal"}, "rh": {1: "Risky", 2: "High-risk"},
                "ternary": CLASS_NAMES}
METRICS = ("accuracy", "s", "c")
METRIC_LABELS = {"accuracy": "Accuracy", "s": "S", "c": "C"}
COLORS = ("#4c72b0", "#dd8452", "#55a868", "#c44e52")


def _svg_text(fig) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": "rotorcascade", "svg.fonttype": "none"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def save_svg(fig, path):
    atomic_write_text(path, _svg_text(fig))


def feature_boxplots(export, task="ternary", columns=4) -> Figure:
    """One panel per feature, one box per class, from precomputed statistics."""
    features = list(dict.fromkeys(s.feature for s in export.stats))
    names = TASK_CLASSES.get(task, CLASS_NAMES)
    rows = max(1, math.ceil(len(features) / columns))
    fig = Figure(figsize=(3.2 * columns, 2.6 * rows))
    for i, feat in enumerate(features):
        ax = fig.add_subplot(rows, columns, i + 1)
        stats = [s for s in export.stats if s.feature == feat]
        ax.bxp([{"med": s.median, "q1": s.q1, "q3": s.q3, "whislo": s.whisker_low,
                 "whishi": s.whisker_high, "fliers": s.outliers,
                 "label": names.get(s.label, str(s.label))} for s in stats],
               showfliers=True, flierprops={"markersize": 2})
        ax.set_title(feat, fontsize=9)
        ax.tick_params(labelsize=7)
    fig.tight_layout()
    return fig


def _value(record, metric):
    v = record.get(f"test_{metric}")
    v = math.nan if v in (None, "") else float(v)
    return v


def score_boxplots(grid) -> Figure:
    """Test accuracy, S and C of ternary vs cascade candidates.

    ``grid`` holds score-grid records (dicts keyed by the score-grid columns).
    """
    fig = Figure(figsize=(9, 3))
    for i, metric in enumerate(METRICS):
        ax = fig.add_subplot(1, 3, i + 1)
        data, labels = [], []
        for kind in ("ternary", "cascade"):
            vals = [_value(r, metric) for r in grid if r["kind"] == kind]
            vals = [v for v in vals if not math.isnan(v)]
            if vals:
                data.append(vals)
                labels.append(kind)
        if data:
            ax.boxplot(data, tick_labels=labels)
        ax.set_title(f"Test {METRIC_LABELS[metric]}")
    fig.tight_layout()
    return fig


def grouped_bars(grid, algorithms=("KNN", "RF", "ANN")) -> Figure:
    """Per algorithm: its ternary model next to every cascade it heads."""
    by_name = {r["model"]: r for r in grid}
    fig = Figure(figsize=(4 * len(algorithms), 3.2))
    for i, algo in enumerate(algorithms):
        ax = fig.add_subplot(1, len(algorithms), i + 1)
        models = [algo] + [f"{algo}+{b}" for b in algorithms]
        models = [m for m in models if m in by_name]
        width = 0.8 / max(1, len(models))
        for j, model in enumerate(models):
            heights = [_value(by_name[model], m) for m in METRICS]
            heights = [0.0 if math.isnan(h) else h for h in heights]
            xs = [k + (j - (len(models) - 1) / 2) * width for k in range(len(METRICS))]
            ax.bar(xs, heights, width, label=model, color=COLORS[j % len(COLORS)])
        ax.set_xticks(range(len(METRICS)), [METRIC_LABELS[m] for m in METRICS])
        ax.set_ylim(0, 1.05)
        ax.set_title(algo)
        ax.legend(fontsize=7, loc="lower right")
    fig.tight_layout()
    return fig


def ranked_table(header, rows) -> Figure:
    cells = [[f"{v:.4f}" if isinstance(v, float) else str(v) for v in r] for r in rows]
    fig = Figure(figsize=(1.1 * len(header), 0.3 * (len(rows) + 2)))
    ax = fig.add_subplot(1, 1, 1)
    ax.axis("off")
    table = ax.table(cellText=cells, colLabels=header, loc="center")
    table.auto_set_font_size(False)
    table.set_fontsize(7)
    return fig
