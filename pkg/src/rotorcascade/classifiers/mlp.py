"""One-hidden-layer tanh network with a softmax output, trained full batch."""
from __future__ import annotations

import numpy as np

from ..errors import DivergenceError, InvalidLabelsError


def init_params(n_in, n_hidden, n_out, rng):
    return {
        "W1": rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, n_hidden)),
        "b1": np.zeros(n_hidden),
        "W2": rng.normal(0.0, 1.0 / np.sqrt(n_hidden), size=(n_hidden, n_out)),
        "b2": np.zeros(n_out),
    }


def _forward(params, X):
    hidden = np.tanh(X @ params["W1"] + params["b1"])
    logits = hidden @ params["W2"] + params["b2"]
    logits = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    return hidden, exp / exp.sum(axis=1, keepdims=True)


def loss_and_grad(params, X, Y):
    """Mean cross-entropy and its gradient; ``Y`` is one-hot."""
    n = X.shape[0]
    hidden, probs = _forward(params, X)
    loss = -np.sum(Y * np.log(np.clip(probs, 1e-300, None))) / n
    d_logits = (probs - Y) / n
    d_hidden = (d_logits @ params["W2"].T) * (1.0 - hidden**2)
    grads = {
        "W2": hidden.T @ d_logits,
        "b2": d_logits.sum(axis=0),
        "W1": X.T @ d_hidden,
        "b1": d_hidden.sum(axis=0),
    }
    return float(loss), grads


def mlp_fit(X, y, hidden=32, epochs=500, lr=0.1, seed=0):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    classes = np.unique(y)
    if classes.size < 2:
        raise InvalidLabelsError("the network needs at least two classes")
    Y = np.eye(classes.size)[np.searchsorted(classes, y)]
    rng = np.random.default_rng(seed)
    params = init_params(X.shape[1], hidden, classes.size, rng)
    for epoch in range(epochs):
        loss, grads = loss_and_grad(params, X, Y)
        if not np.isfinite(loss) or not all(np.all(np.isfinite(v)) for v in params.values()):
            raise DivergenceError(
                f"loss became non-finite at epoch {epoch} (lr={lr}, hidden={hidden})")
        for key in params:
            params[key] -= lr * grads[key]
    loss, _ = loss_and_grad(params, X, Y)
    if not np.isfinite(loss):
        raise DivergenceError(f"loss became non-finite after {epochs} epochs (lr={lr})")
    return {"hidden": int(hidden), "epochs": int(epochs), "lr": float(lr),
            "classes": classes, "params": params, "final_loss": loss}


def mlp_predict_proba(state, X):
    _, probs = _forward(state["params"], np.atleast_2d(np.asarray(X, dtype=float)))
    return probs


def mlp_predict(state, X):
    return state["classes"][np.argmax(mlp_predict_proba(state, X), axis=1)]
