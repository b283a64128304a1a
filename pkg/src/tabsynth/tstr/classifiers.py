"""The four downstream classifiers used for train-on-synthetic evaluation.

All of them are deterministic given data and seed. Ties resolve to the
smallest class index; the tree and k-NN do not depend on row order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import Dataset, ScalerParams
from ..numerics import (AdamState, MlpParams, MlpSpec, SeededRng, adam_step, init_mlp,
                        mlp_backward, mlp_forward)

KINDS = ("decision_tree", "knn", "neural_net", "linear_svm")
DEFAULTS = {
    "decision_tree": {"max_depth": 12},
    "knn": {"k": 5},
    "neural_net": {"hidden": (64, 32), "epochs": 200, "lr": 1e-3, "batch_size": 64},
    "linear_svm": {"penalty": 1e-3, "epochs": 200, "lr": 1e-2, "batch_size": 64},
}


# -- decision tree -------------------------------------------------------------

def _gini_from_counts(counts):
    n = counts.sum(axis=-1)
    safe = np.where(n > 0, n, 1)
    return 1.0 - np.sum((counts / safe[..., None]) ** 2, axis=-1)


@dataclass
class DecisionTree:
    """Greedy binary tree minimising weighted Gini impurity."""
    max_depth: int = 12
    n_classes: int = 0
    # flat node arrays; feature == -1 marks a leaf
    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)

    def fit(self, X, y, n_classes, seed=0):
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        self.n_classes = n_classes
        Y = np.zeros((y.size, n_classes))
        Y[np.arange(y.size), y] = 1.0
        self._grow(X, y, Y, 0)
        return self

    def _new_node(self, label):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(int(label))
        return len(self.feature) - 1

    def _grow(self, X, y, Y, depth):
        counts = np.bincount(y, minlength=self.n_classes)
        node = self._new_node(np.argmax(counts))
        parent = _gini_from_counts(counts.astype(float))
        if depth >= self.max_depth or parent <= 0.0 or y.size < 2:
            return node
        best = None
        n = y.size
        for j in range(X.shape[1]):
            order = np.argsort(X[:, j], kind="stable")
            xs = X[order, j]
            valid = np.flatnonzero(xs[1:] > xs[:-1])  # split after position i
            if valid.size == 0:
                continue
            cum = np.cumsum(Y[order], axis=0)
            left = cum[valid]
            right = cum[-1] - left
            n_left = valid + 1.0
            score = (n_left * _gini_from_counts(left) + (n - n_left) * _gini_from_counts(right)) / n
            k = int(np.argmin(score))
            if best is None or score[k] < best[0]:
                i = valid[k]
                thr = xs[i] + 0.5 * (xs[i + 1] - xs[i])
                if thr >= xs[i + 1]:
                    thr = xs[i]
                best = (score[k], j, thr)
        if best is None or best[0] >= parent - 1e-12:
            return node
        _, j, thr = best
        mask = X[:, j] <= thr
        self.feature[node] = j
        self.threshold[node] = float(thr)
        self.left[node] = self._grow(X[mask], y[mask], Y[mask], depth + 1)
        self.right[node] = self._grow(X[~mask], y[~mask], Y[~mask], depth + 1)
        return node

    def predict(self, X):
        out = np.empty(X.shape[0], dtype=np.int64)
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            j = self.feature[node]
            if j < 0:
                out[idx] = self.value[node]
                continue
            go_left = X[idx, j] <= self.threshold[node]
            stack.append((self.left[node], idx[go_left]))
            stack.append((self.right[node], idx[~go_left]))
        return out


# -- k nearest neighbours --------------------------------------------------------

@dataclass
class KNearest:
    k: int = 5
    X: np.ndarray | None = None
    y: np.ndarray | None = None
    n_classes: int = 0

    def fit(self, X, y, n_classes, seed=0):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        self.X, self.y, self.n_classes = X.copy(), y.copy(), n_classes
        return self

    def predict(self, X, block: int = 64):
        k = min(self.k, self.y.size)
        out = np.empty(X.shape[0], dtype=np.int64)
        for s in range(0, X.shape[0], block):
            d = np.sum((X[s:s + block, None, :] - self.X[None, :, :]) ** 2, axis=2)
            kth = np.partition(d, k - 1, axis=1)[:, k - 1]
            for r in range(d.shape[0]):
                cand = np.flatnonzero(d[r] <= kth[r])
                # nearest first; equal distances prefer the smaller class index
                cand = cand[np.lexsort((self.y[cand], d[r, cand]))][:k]
                votes = np.bincount(self.y[cand], minlength=self.n_classes)
                out[s + r] = int(np.argmax(votes))
        return out


# -- softmax MLP -------------------------------------------------------------------

@dataclass
class NeuralNet:
    hidden: tuple = (64, 32)
    epochs: int = 200
    lr: float = 1e-3
    batch_size: int = 64
    spec: MlpSpec | None = None
    params: MlpParams | None = None

    def fit(self, X, y, n_classes, seed=0):
        rng = SeededRng(seed)
        # linear head; softmax is applied outside so the cross-entropy
        # gradient on the logits is simply p - t
        self.spec = MlpSpec((X.shape[1], *self.hidden, n_classes), "linear")
        self.params = init_mlp(self.spec, rng.spawn("init"))
        opt = AdamState(lr=self.lr, beta1=0.9, beta2=0.999)
        T = np.zeros((y.size, n_classes))
        T[np.arange(y.size), y] = 1.0
        batch_rng = rng.spawn("batches")
        for _ in range(self.epochs):
            perm = batch_rng.permutation(y.size)
            for i in range(0, y.size, self.batch_size):
                idx = perm[i:i + self.batch_size]
                logits, cache = mlp_forward(self.params, self.spec, X[idx])
                g = (softmax(logits) - T[idx]) / idx.size
                grads, _ = mlp_backward(self.params, self.spec, cache, g)
                adam_step(self.params, grads, opt)
        return self

    def predict_proba(self, X):
        return softmax(mlp_forward(self.params, self.spec, X)[0])

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)


def softmax(a):
    z = a - a.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# -- one-vs-rest linear SVM ----------------------------------------------------------

@dataclass
class LinearSvm:
    penalty: float = 1e-3
    epochs: int = 200
    lr: float = 1e-2
    batch_size: int = 64
    W: np.ndarray | None = None
    b: np.ndarray | None = None

    def fit(self, X, y, n_classes, seed=0):
        rng = SeededRng(seed).spawn("batches")
        d = X.shape[1]
        params = MlpParams([np.zeros((n_classes, d))], [np.zeros(n_classes)])
        opt = AdamState(lr=self.lr, beta1=0.9, beta2=0.999)
        T = -np.ones((y.size, n_classes))
        T[np.arange(y.size), y] = 1.0
        for _ in range(self.epochs):
            perm = rng.permutation(y.size)
            for i in range(0, y.size, self.batch_size):
                idx = perm[i:i + self.batch_size]
                W, b = params.weights[0], params.biases[0]
                margin = T[idx] * (X[idx] @ W.T + b)
                g = np.where(margin < 1.0, -T[idx], 0.0) / idx.size
                grads = MlpParams([g.T @ X[idx] + self.penalty * W], [g.sum(axis=0)])
                adam_step(params, grads, opt)
        self.W, self.b = params.weights[0], params.biases[0]
        return self

    def decision_function(self, X):
        return X @ self.W.T + self.b

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)


# -- public API ----------------------------------------------------------------------

_BUILDERS = {"decision_tree": DecisionTree, "knn": KNearest,
             "neural_net": NeuralNet, "linear_svm": LinearSvm}


@dataclass
class TrainedClassifier:
    kind: str
    model: object
    n_classes: int
    n_features: int
    scaler: ScalerParams | None = None

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            if X.size == 0:
                return np.empty(0, dtype=np.int64)
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        if X.shape[0] == 0:
            return np.empty(0, dtype=np.int64)
        if self.scaler is not None:
            X = self.scaler.transform(X)
        return self.model.predict(X)


def fit_classifier(kind: str, train: Dataset, seed: int = 0, scaler: ScalerParams | None = None,
                   **params) -> TrainedClassifier:
    """Fit one classifier of ``kind`` on ``train``.

    With ``scaler`` given, features are transformed by it before fitting and
    prediction. Unspecified hyperparameters take the ``DEFAULTS`` entry.
    """
    if kind not in _BUILDERS:
        raise ValueError(f"unknown classifier kind {kind!r}; expected one of {KINDS}")
    counts = np.bincount(train.y, minlength=train.n_classes)
    need = 2 if kind == "neural_net" else 1
    if np.any(counts < need):
        empty = [train.class_names[c] for c in np.flatnonzero(counts < need)]
        raise ValueError(f"{kind} needs >= {need} training rows per class; short: {empty}")
    hyper = {**DEFAULTS[kind], **params}
    for name, v in hyper.items():
        vals = v if isinstance(v, (tuple, list)) else (v,)
        if any(x <= 0 for x in vals) and not (name == "max_depth" and v == 0):
            raise ValueError(f"{kind}: hyperparameter {name} must be positive")
    if "hidden" in hyper:
        hyper["hidden"] = tuple(hyper["hidden"])
    X = train.X if scaler is None else scaler.transform(train.X)
    model = _BUILDERS[kind](**hyper).fit(X, train.y, train.n_classes, seed)
    return TrainedClassifier(kind, model, train.n_classes, train.n_features, scaler)


def predict(model: TrainedClassifier, X) -> np.ndarray:
    return model.predict(X)
