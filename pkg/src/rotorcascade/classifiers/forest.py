"""Random forest of CART trees grown on bootstrap samples with Gini splits.

Trees are stored as flat arrays (node -> feature, threshold, children, class
distribution) so they serialize to JSON without loss.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from ..errors import InvalidLabelsError

LEAF = -1


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.dot(p, p))


def _best_split(X, y_idx, rows, features, n_classes):
    """Lowest weighted child impurity over ``features``; None if all constant."""
    n = rows.size
    best = None
    for f in features:
        xs = X[rows, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y_idx[rows][order]] = 1.0
        left = np.cumsum(onehot, axis=0)[:-1]
        right = left[-1] + onehot[-1] - left
        n_left = np.arange(1, n, dtype=float)
        n_right = n - n_left
        g_left = 1.0 - np.sum(left**2, axis=1) / n_left**2
        g_right = 1.0 - np.sum(right**2, axis=1) / n_right**2
        cost = (n_left * g_left + n_right * g_right) / n
        cost[~valid] = np.inf
        i = int(np.argmin(cost))
        if best is None or cost[i] < best[0]:
            best = (cost[i], f, 0.5 * (xs[i] + xs[i + 1]))
    return best


def grow_tree(X, y_idx, n_classes, max_features, rng, max_depth=None, min_samples_split=2):
    n_features = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []
    importance = np.zeros(n_features)
    n_total = y_idx.size

    def new_node(rows):
        counts = np.bincount(y_idx[rows], minlength=n_classes).astype(float)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(counts)
        return len(feature) - 1

    root = new_node(np.arange(n_total))
    stack = [(root, np.arange(n_total), 0)]
    while stack:
        node, rows, depth = stack.pop()
        counts = value[node]
        impurity = gini(counts)
        if impurity == 0.0 or rows.size < min_samples_split or (
                max_depth is not None and depth >= max_depth):
            continue
        # keep drawing features until max_features non-constant ones were tried
        perm = rng.permutation(n_features)
        best, tried = None, 0
        for f in perm:
            col = X[rows, f]
            if col.min() == col.max():
                continue
            split = _best_split(X, y_idx, rows, [f], n_classes)
            if best is None or split[0] < best[0]:
                best = split
            tried += 1
            if tried >= max_features:
                break
        if best is None:
            continue
        cost, f, thr = best
        importance[f] += rows.size / n_total * (impurity - cost)
        go_left = X[rows, f] <= thr
        lrows, rrows = rows[go_left], rows[~go_left]
        feature[node] = int(f)
        threshold[node] = float(thr)
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))
    probs = np.array(value)
    probs = probs / probs.sum(axis=1, keepdims=True)
    tree = {
        "feature": np.array(feature, dtype=int),
        "threshold": np.array(threshold),
        "left": np.array(left, dtype=int),
        "right": np.array(right, dtype=int),
        "value": probs,
    }
    return tree, importance


def tree_apply(tree, X):
    """Leaf index reached by every row."""
    node = np.zeros(X.shape[0], dtype=int)
    active = tree["feature"][node] != LEAF
    while active.any():
        idx = np.flatnonzero(active)
        f = tree["feature"][node[idx]]
        go_left = X[idx, f] <= tree["threshold"][node[idx]]
        node[idx] = np.where(go_left, tree["left"][node[idx]], tree["right"][node[idx]])
        active = tree["feature"][node] != LEAF
    return node


def forest_fit(X, y, n_trees=100, max_features="sqrt", max_depth=None, seed=0):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    classes = np.unique(y)
    if classes.size < 2:
        raise InvalidLabelsError("a forest needs at least two classes")
    y_idx = np.searchsorted(classes, y)
    n, k = X.shape
    if max_features == "sqrt":
        m = max(1, int(math.sqrt(k)))
    elif max_features is None:
        m = k
    else:
        m = max(1, min(k, int(max_features)))
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    importance = np.zeros(k)
    for ss in seeds:
        rng = np.random.default_rng(ss)
        boot = rng.integers(0, n, size=n)
        tree, imp = grow_tree(X[boot], y_idx[boot], classes.size, m, rng, max_depth)
        trees.append(tree)
        importance += imp
    total = importance.sum()
    if total > 0:
        importance = importance / total
    else:
        warnings.warn("no tree made a split; importances set uniform", stacklevel=2)
        importance = np.full(k, 1.0 / k)
    return {
        "n_trees": int(n_trees),
        "max_features": m,
        "classes": classes,
        "trees": trees,
        "importances": importance,
    }


def forest_predict_proba(state, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    votes = np.zeros((X.shape[0], state["classes"].size))
    rows = np.arange(X.shape[0])
    for tree in state["trees"]:
        leaf = tree_apply(tree, X)
        votes[rows, np.argmax(tree["value"][leaf], axis=1)] += 1.0
    return votes / len(state["trees"])


def forest_predict(state, X):
    """Majority vote; ties go to the smallest class label."""
    return state["classes"][np.argmax(forest_predict_proba(state, X), axis=1)]
