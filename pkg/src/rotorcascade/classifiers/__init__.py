"""From-scratch KNN, random forest and one-hidden-layer network."""
from .cv import CvReport, fold_assignment, fold_consistency, kfold_cv
from .forest import forest_fit, forest_predict
from .knn import knn_fit, knn_predict
from .mlp import loss_and_grad, mlp_fit, mlp_predict
from .model import (
    ALGORITHMS,
    DEFAULT_PARAMS,
    DISPLAY_NAMES,
    ModelSpec,
    TrainedModel,
    model_from_json,
    model_to_json,
    train_model,
)
from .standardize import Standardizer, standardize_apply, standardize_fit

__all__ = [
    "ALGORITHMS", "DEFAULT_PARAMS", "DISPLAY_NAMES", "CvReport", "ModelSpec",
    "Standardizer", "TrainedModel", "fold_assignment", "fold_consistency",
    "forest_fit", "forest_predict", "kfold_cv", "knn_fit", "knn_predict",
    "loss_and_grad", "mlp_fit", "mlp_predict", "model_from_json", "model_to_json",
    "standardize_apply", "standardize_fit", "train_model",
]
