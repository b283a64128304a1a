"""Train-on-synthetic, test-on-real evaluation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset, ScalerParams, fit_scaler
from .classifiers import DEFAULTS, KINDS, TrainedClassifier, fit_classifier, predict

METRICS = ("accuracy", "precision", "recall", "f1")
LABELS = {"decision_tree": "Decision Tree", "knn": "KNN",
          "neural_net": "Neural Net", "linear_svm": "SVM"}


def _ratio(num, den):
    return np.divide(num, den, out=np.zeros_like(num, dtype=float), where=den > 0)


def classification_metrics(y_true, y_pred, n_classes: int) -> dict:
    """Accuracy plus macro precision/recall/F1 over all ``n_classes`` (0/0 := 0)."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValueError("y_true and y_pred must be non-empty and of equal length")
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(conf, (y_true, y_pred), 1)
    tp = np.diag(conf).astype(float)
    precision = _ratio(tp, conf.sum(axis=0).astype(float))
    recall = _ratio(tp, conf.sum(axis=1).astype(float))
    f1 = _ratio(2.0 * precision * recall, precision + recall)
    return {
        "accuracy": float(tp.sum() / y_true.size),
        "precision": float(precision.mean()),
        "recall": float(recall.mean()),
        "f1": float(f1.mean()),
        "confusion": conf,
    }


@dataclass(frozen=True)
class TstrReport:
    kinds: tuple
    per_classifier: dict      # kind -> metrics dict (with confusion)
    averages: dict
    class_names: tuple
    n_train: int
    n_test: int

    def to_dict(self) -> dict:
        per = {}
        for kind in self.kinds:
            m = self.per_classifier[kind]
            per[kind] = {**{k: m[k] for k in METRICS}, "confusion": m["confusion"].tolist()}
        return {
            "classifiers": list(self.kinds),
            "per_classifier": per,
            "averages": dict(self.averages),
            "class_names": list(self.class_names),
            "sample_counts": {"synthetic_train": self.n_train, "real_test": self.n_test},
        }


def run_tstr(synth_train: Dataset, real_test: Dataset, kinds=KINDS, seed: int = 0,
             scaler: ScalerParams | None = None, params: dict | None = None) -> TstrReport:
    """Fit each classifier on ``synth_train`` and score it on ``real_test``.

    Features are scaled with ``scaler``, which should come from real data;
    when omitted it is fitted on ``real_test``. ``params`` maps a kind to
    hyperparameter overrides.
    """
    if synth_train.schema != real_test.schema:
        raise ValueError("synthetic and real datasets have different schemas")
    if synth_train.class_names != real_test.class_names:
        raise ValueError("synthetic and real datasets have different class lists")
    scaler = scaler if scaler is not None else fit_scaler(real_test)
    params = params or {}
    per = {}
    for kind in kinds:
        clf = fit_classifier(kind, synth_train, seed, scaler, **params.get(kind, {}))
        per[kind] = classification_metrics(real_test.y, clf.predict(real_test.X),
                                           real_test.n_classes)
    averages = {m: float(np.mean([per[k][m] for k in kinds])) for m in METRICS}
    return TstrReport(tuple(kinds), per, averages, real_test.class_names,
                      synth_train.n_samples, real_test.n_samples)


def format_table(reports: dict, metric: str = "accuracy") -> str:
    """Classifier rows by model columns, plus an average row."""
    models = list(reports)
    kinds = reports[models[0]].kinds
    width = max(12, *(len(m) for m in models))
    head = f"{'Classifier':<14}" + "".join(f"{m:>{width + 2}}" for m in models)
    lines = [head, "-" * len(head)]
    for kind in kinds:
        cells = "".join(f"{reports[m].per_classifier[kind][metric]:>{width + 2}.3f}" for m in models)
        lines.append(f"{LABELS.get(kind, kind):<14}" + cells)
    lines.append("-" * len(head))
    cells = "".join(f"{reports[m].averages[metric]:>{width + 2}.3f}" for m in models)
    lines.append(f"{'Average':<14}" + cells)
    return "\n".join(lines)


__all__ = ["DEFAULTS", "KINDS", "METRICS", "TrainedClassifier", "TstrReport",
           "classification_metrics", "fit_classifier", "format_table", "predict", "run_tstr"]
