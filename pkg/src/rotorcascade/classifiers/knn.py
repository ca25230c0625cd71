import numpy as np

from ..errors import InvalidInputError

_CHUNK = 128


def knn_fit(X, y, k=5):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if k > X.shape[0]:
        raise InvalidInputError(f"k={k} exceeds the {X.shape[0]} training rows")
    return {"k": int(k), "X": X, "y": y}


def knn_predict(state, X):
    """Majority vote of the k nearest rows (Euclidean).

    Vote ties go to the tied class holding the nearest neighbour; exact
    distance ties are broken by training-row order.
    """
    train, labels, k = state["X"], state["y"], state["k"]
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(X.shape[0], dtype=int)
    for start in range(0, X.shape[0], _CHUNK):
        block = X[start:start + _CHUNK]
        d2 = np.sum((block[:, None, :] - train[None, :, :]) ** 2, axis=2)
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out[start:start + block.shape[0]] = [_vote(labels[nearest]) for nearest in order]
    return out


def _vote(votes):
    classes, counts = np.unique(votes, return_counts=True)
    tied = classes[counts == counts.max()]
    if tied.size == 1:
        return tied[0]
    return next(v for v in votes if v in tied)
