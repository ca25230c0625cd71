"""CSV and text formats shared by the command-line driver.

All writers go through :func:`atomic_write_text` (temporary file + rename)
and emit UTF-8 with LF line endings.
"""
from __future__ import annotations

import csv
import io
import os
import tempfile
from collections import OrderedDict
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, MalformedCSVError
from .features import FeatureMatrix
from .signal import N_SENSORS, Wave

SAMPLE_FORMAT = "{:.6f}"


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt_float(x) -> str:
    """Shortest round-trip representation; integers print without a fraction."""
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _read_rows(path, required):
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"missing file: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCSVError(f"{path}: empty file", path, 1) from None
        absent = [c for c in required if c not in header]
        if absent:
            raise MalformedCSVError(f"{path}:1: missing columns {absent}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedCSVError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}", path, lineno)
            yield lineno, header, row


def _number(text, path, lineno, column, kind=float):
    try:
        value = kind(text)
    except ValueError:
        raise MalformedCSVError(
            f"{path}:{lineno}: column {column!r} is not a number: {text!r}", path, lineno) from None
    if kind is float and not np.isfinite(value):
        raise MalformedCSVError(f"{path}:{lineno}: column {column!r} is not finite", path, lineno)
    return value


# wave bundles

def wave_bundle_text(arrays) -> str:
    """``arrays``: iterable of six-wave lists, one per acquisition."""
    rows = []
    length = None
    for waves in arrays:
        for w in sorted(waves, key=lambda w: w.sensor_id):
            length = length or len(w)
            rows.append([w.machine_id, str(w.sensor_id), fmt_float(w.timestamp)]
                        + [SAMPLE_FORMAT.format(v) for v in w.samples])
    header = ["machine_id", "sensor_id", "timestamp"] + [f"s{i}" for i in range(length or 0)]
    return _csv_text(header, rows)


def write_wave_bundle(path, arrays):
    atomic_write_text(path, wave_bundle_text(arrays))


def read_wave_bundle(path) -> list:
    """Six-wave lists in file order of their first appearance."""
    groups = OrderedDict()
    for lineno, header, row in _read_rows(path, ["machine_id", "sensor_id", "timestamp"]):
        sample_cols = header[3:]
        if not sample_cols or header[:3] != ["machine_id", "sensor_id", "timestamp"]:
            raise MalformedCSVError(f"{path}:1: bad wave-bundle header", path, 1)
        sensor = _number(row[1], path, lineno, "sensor_id", int)
        ts = _number(row[2], path, lineno, "timestamp")
        samples = np.array([_number(v, path, lineno, c) for v, c in zip(row[3:], sample_cols)])
        try:
            wave = Wave(row[0], sensor, ts, samples)
        except InvalidInputError as exc:
            raise MalformedCSVError(f"{path}:{lineno}: {exc}", path, lineno) from None
        key = (row[0], ts)
        bucket = groups.setdefault(key, {})
        if sensor in bucket:
            raise MalformedCSVError(
                f"{path}:{lineno}: duplicate sensor {sensor} for {row[0]}@{row[2]}", path, lineno)
        bucket[sensor] = wave
    out = []
    for (machine, ts), bucket in groups.items():
        if len(bucket) != N_SENSORS:
            raise MalformedCSVError(
                f"{path}: {machine}@{fmt_float(ts)} has sensors {sorted(bucket)}, need 1..6", path)
        out.append([bucket[s] for s in range(1, N_SENSORS + 1)])
    return out


# feature tables

def feature_csv_text(matrix: FeatureMatrix) -> str:
    header = ["machine_id", "timestamp", "label"] + list(matrix.names)
    rows = []
    for i in range(len(matrix)):
        label = "" if matrix.labels is None else str(int(matrix.labels[i]))
        cells = ["" if matrix.missing[i, j] else fmt_float(matrix.values[i, j])
                 for j in range(len(matrix.names))]
        rows.append([matrix.machine_ids[i], fmt_float(matrix.timestamps[i]), label] + cells)
    return _csv_text(header, rows)


def write_feature_csv(path, matrix: FeatureMatrix):
    atomic_write_text(path, feature_csv_text(matrix))


def read_feature_csv(path) -> FeatureMatrix:
    ids, stamps, labels, rows = [], [], [], []
    names = None
    for lineno, header, row in _read_rows(path, ["machine_id", "timestamp", "label"]):
        if names is None:
            if header[:3] != ["machine_id", "timestamp", "label"]:
                raise MalformedCSVError(f"{path}:1: bad feature header", path, 1)
            names = header[3:]
        ids.append(row[0])
        stamps.append(_number(row[1], path, lineno, "timestamp"))
        labels.append(None if row[2] == "" else _number(row[2], path, lineno, "label", int))
        rows.append([np.nan if v == "" else _number(v, path, lineno, c)
                     for v, c in zip(row[3:], names)])
    if names is None:
        raise MalformedCSVError(f"{path}: no data rows", path)
    unlabelled = [lab is None for lab in labels]
    if all(unlabelled):
        lab = None
    elif any(unlabelled):
        raise MalformedCSVError(f"{path}: some rows are labelled and some are not", path)
    else:
        lab = np.array(labels, dtype=int)
    values = np.array(rows, dtype=float).reshape(len(ids), len(names))
    return FeatureMatrix(names, values, ids, stamps, lab)


# predictions

PREDICTION_COLUMNS = ["loop_id", "timestamp", "truth", "predicted"]


def prediction_csv_text(records) -> str:
    """``records``: iterable of (loop_id, timestamp, truth, predicted)."""
    return _csv_text(PREDICTION_COLUMNS,
                     [[str(l), fmt_float(t), str(int(y)), str(int(p))] for l, t, y, p in records])


def read_prediction_csv(path) -> list:
    out = []
    for lineno, header, row in _read_rows(path, PREDICTION_COLUMNS):
        cell = dict(zip(header, row))
        truth = _number(cell["truth"], path, lineno, "truth", int)
        pred = _number(cell["predicted"], path, lineno, "predicted", int)
        for col, v in (("truth", truth), ("predicted", pred)):
            if v not in (0, 1, 2):
                raise MalformedCSVError(f"{path}:{lineno}: {col} must be 0, 1 or 2", path, lineno)
        out.append((cell["loop_id"], _number(cell["timestamp"], path, lineno, "timestamp"),
                    truth, pred))
    if not out:
        raise MalformedCSVError(f"{path}: no prediction rows", path)
    return out


def table_csv_text(header, rows) -> str:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, (float, np.floating)):
            return fmt_float(v)
        return str(v)

    return _csv_text(header, [[cell(v) for v in row] for row in rows])


def read_table_csv(path) -> list:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"missing file: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
