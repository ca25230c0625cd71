"""Trained model container, training dispatch and JSON serialization."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .. import audit
from ..errors import FeatureMismatchError, InvalidInputError, InvalidLabelsError
from .forest import forest_fit, forest_predict
from .knn import knn_fit, knn_predict
from .mlp import mlp_fit, mlp_predict
from .standardize import Standardizer, fit_arrays

ALGORITHMS = ("knn", "forest", "mlp")
DISPLAY_NAMES = {"knn": "KNN", "forest": "RF", "mlp": "ANN"}

DEFAULT_PARAMS = {
    "knn": {"k": 5},
    "forest": {"n_trees": 100, "max_features": "sqrt", "max_depth": None},
    "mlp": {"hidden": 32, "epochs": 500, "lr": 0.1},
}

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    algo: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise InvalidInputError(f"unknown algorithm {self.algo!r}; choose from {ALGORITHMS}")

    def resolved(self) -> dict:
        out = dict(DEFAULT_PARAMS[self.algo])
        unknown = set(self.params) - set(out)
        if unknown:
            raise InvalidInputError(f"unknown {self.algo} parameters: {sorted(unknown)}")
        out.update(self.params)
        return out


@dataclass
class TrainedModel:
    variant: str
    params: dict
    feature_names: list
    standardizer: Standardizer
    state: dict
    seed: int = 0

    @property
    def importances(self) -> np.ndarray:
        if self.variant != "forest":
            raise InvalidInputError("only forests carry feature importances")
        return self.state["importances"]

    def _check(self, names):
        if list(names) != list(self.feature_names):
            raise FeatureMismatchError(
                f"model expects features {self.feature_names}, got {list(names)}")

    def predict_values(self, values) -> np.ndarray:
        """Predict from raw (unstandardized) rows already in feature order."""
        X = self.standardizer.apply(np.atleast_2d(np.asarray(values, dtype=float)))
        if self.variant == "knn":
            return knn_predict(self.state, X)
        if self.variant == "forest":
            return forest_predict(self.state, X)
        return mlp_predict(self.state, X)

    def predict(self, matrix) -> np.ndarray:
        """Predict every row of a FeatureMatrix carrying (at least) this model's features."""
        if list(matrix.names) != list(self.feature_names):
            missing = [n for n in self.feature_names if n not in matrix.names]
            if missing:
                raise FeatureMismatchError(f"input lacks model features {missing}")
            matrix = matrix.select(self.feature_names)
        return self.predict_values(matrix.values)

    def predict_row(self, names, values) -> int:
        self._check(names)
        return int(self.predict_values([values])[0])


def train_model(spec: ModelSpec, matrix, labels=None, seed: int = 0) -> TrainedModel:
    """Fit a standardizer and a learner on ``matrix`` (training rows only)."""
    labels = matrix.labels if labels is None else np.asarray(labels, dtype=int)
    if labels is None:
        raise InvalidLabelsError("training needs labels")
    if np.unique(labels).size < 2:
        raise InvalidLabelsError("training needs at least two classes")
    if matrix.missing.any():
        raise InvalidInputError("training matrix contains missing feature values")
    audit.record("train", matrix.keys)
    audit.record("standardize", matrix.keys)
    params = spec.resolved()
    std = fit_arrays(matrix.values, matrix.names)
    X = std.apply(matrix.values)
    if spec.algo == "knn":
        state = knn_fit(X, labels, **params)
    elif spec.algo == "forest":
        state = forest_fit(X, labels, seed=seed, **params)
    else:
        state = mlp_fit(X, labels, seed=seed, **params)
    return TrainedModel(spec.algo, params, list(matrix.names), std, state, seed)


# serialization

def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.tolist(), "dtype": str(obj.dtype), "shape": list(obj.shape)}
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            return np.array(obj["__ndarray__"], dtype=obj["dtype"]).reshape(obj["shape"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": "rotorcascade-model",
        "version": FORMAT_VERSION,
        "variant": model.variant,
        "params": _encode(model.params),
        "seed": int(model.seed),
        "feature_names": list(model.feature_names),
        "standardizer": {"means": _encode(model.standardizer.means),
                         "stds": _encode(model.standardizer.stds)},
        "state": _encode(model.state),
    }


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("format") != "rotorcascade-model":
        raise InvalidInputError("not a serialized model document")
    std = Standardizer(_decode(doc["standardizer"]["means"]), _decode(doc["standardizer"]["stds"]))
    return TrainedModel(doc["variant"], _decode(doc["params"]), list(doc["feature_names"]),
                        std, _decode(doc["state"]), doc["seed"])


def model_to_json(model: TrainedModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, allow_nan=False)


def model_from_json(text: str) -> TrainedModel:
    return model_from_dict(json.loads(text))
