"""Versioned JSON model files.

Floats are written with 17 significant digits and keys in a fixed order, so
``save -> load -> save`` reproduces the file byte for byte.
"""
from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from ..data import FeatureSchema, ScalerParams
from ..numerics import MlpParams, MlpSpec
from .models import (DiscriminatorModel, GanConfig, GeneratorModel, TrainedGan,
                     TrainingLog)

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def canonical_json(obj) -> str:
    """Compact JSON with sorted keys and ``%.17g`` floats."""
    if isinstance(obj, dict):
        items = (json.dumps(str(k)) + ":" + canonical_json(v) for k, v in sorted(obj.items()))
        return "{" + ",".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return canonical_json(obj.tolist())
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError("cannot serialize non-finite number")
        s = "%.17g" % v
        return s if any(ch in s for ch in ".en") else s + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _net(params: MlpParams) -> dict:
    return {"layers": [{"w": w, "b": b} for w, b in zip(params.weights, params.biases)]}


def model_to_dict(model: TrainedGan) -> dict:
    log = model.log
    return {
        "format_version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "class_names": list(model.class_names),
        "feature_names": list(model.schema.feature_names),
        "label_column": model.schema.label_column,
        "scaler": {"min": model.scaler.min, "max": model.scaler.max},
        "generator": _net(model.generator.params),
        "discriminator": _net(model.discriminator.params),
        "log": {name: list(getattr(log, attr)) for name, attr in zip(
            TrainingLog.COLUMNS,
            ("epoch", "loss_d", "loss_adv", "loss_mv", "loss_corr", "loss_g"))},
    }


def dumps_model(model: TrainedGan) -> str:
    return canonical_json(model_to_dict(model)) + "\n"


def save_model(model: TrainedGan, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps_model(model), encoding="utf-8")
    os.replace(tmp, path)


def _params(doc, spec: MlpSpec, what: str) -> MlpParams:
    try:
        layers = doc["layers"]
        p = MlpParams([np.array(l["w"], dtype=np.float64) for l in layers],
                      [np.array(l["b"], dtype=np.float64) for l in layers])
        p.check(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{what}: malformed layers ({exc})") from exc
    if not all(np.all(np.isfinite(a)) for a in p.arrays()):
        raise ModelFormatError(f"{what}: non-finite parameter")
    return p


def model_from_dict(doc: dict) -> TrainedGan:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    try:
        config = GanConfig.from_dict(doc["config"])
        class_names = tuple(doc["class_names"])
        schema = FeatureSchema(tuple(doc["feature_names"]), doc["label_column"])
        scaler = ScalerParams(doc["scaler"]["min"], doc["scaler"]["max"])
        log_doc = doc["log"]
        log = TrainingLog(*(list(log_doc[c]) for c in TrainingLog.COLUMNS))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    C, d = len(class_names), len(schema.feature_names)
    if len(scaler) != d:
        raise ModelFormatError("scaler length does not match feature count")
    g_spec = MlpSpec((config.latent_dim + C, *config.gen_hidden, d), "tanh")
    d_spec = MlpSpec((d + C, *config.disc_hidden, 1), "linear")
    gen = GeneratorModel(g_spec, _params(doc.get("generator", {}), g_spec, "generator"),
                         config.latent_dim, C)
    disc = DiscriminatorModel(d_spec, _params(doc.get("discriminator", {}), d_spec, "discriminator"),
                              d, C)
    return TrainedGan(config, gen, disc, scaler, class_names, schema, log)


def load_model(path) -> TrainedGan:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a complete JSON document ({exc})") from exc
    return model_from_dict(doc)
