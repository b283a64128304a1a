"""Command-line pipeline: fixture -> train -> synth -> eval -> tstr.

Every command takes ``--config`` (a run-config JSON), ``--out`` (output
directory, overriding ``paths.out_dir``) and ``--seed`` (overriding the
top-level seed). Stage seeds are derived from the top-level seed with
:func:`tabsynth.numerics.derive_seed` unless a section pins its own. The
resolved config is echoed next to the outputs, and any files written by
a failing command are removed before it exits non-zero.
"""
from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from pathlib import Path

import numpy as np

from .data import DataFormatError, class_stats, fit_scaler, load_csv, train_test_split, write_csv
from .fidelity import evaluate_fidelity, export_histograms
from .genmodels import (ConfigError, GanConfig, ModelFormatError, TrainingDivergence, load_model,
                        save_model, synthesize_balanced, train)
from .genmodels.io import canonical_json
from .numerics import derive_seed
from .scenario import ScenarioConfig, generate
from .tstr import KINDS, format_table, run_tstr

DEFAULTS = {
    "seed": 0,
    "scenario": {"kinds": ["external", "internal"], "test_fraction": None,
                 "external": {}, "internal": {}},
    "gan": {},
    "fidelity": {"sigma": "median", "bins": 64},
    "tstr": {"kinds": list(KINDS), "params": {}},
    "paths": {"out_dir": "out"},
}


class CliError(Exception):
    pass


# -- run config -----------------------------------------------------------------

def _merge(base, over, where):
    out = copy.deepcopy(base)
    for key, value in over.items():
        if key not in base:
            raise CliError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict) and base[key] and isinstance(value, dict):
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def load_run_config(path=None, seed=None, out=None) -> dict:
    """Defaults, overlaid by the JSON file at ``path``, overlaid by CLI flags.

    Keys outside the documented sections are rejected. The ``gan`` section
    and the per-kind scenario sections are checked by their own config types.
    """
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise CliError("config must be a JSON object")
    cfg = _merge(DEFAULTS, doc, "")
    # open sections are checked by the config types that consume them
    for where, section in (("gan", cfg["gan"]), ("scenario.external", cfg["scenario"]["external"]),
                           ("scenario.internal", cfg["scenario"]["internal"]),
                           ("tstr.params", cfg["tstr"]["params"])):
        if not isinstance(section, dict):
            raise CliError(f"config section {where} must be an object")
    if seed is not None:
        cfg["seed"] = seed
    if out is not None:
        cfg["paths"]["out_dir"] = str(out)
    if not isinstance(cfg["seed"], int) or not 0 <= cfg["seed"] < 2**64:
        raise CliError("seed must be an unsigned 64-bit integer")
    bad = [k for k in cfg["scenario"]["kinds"] if k not in ("external", "internal")]
    if bad:
        raise CliError(f"unknown scenario kind(s) {bad}")
    bad = [k for k in cfg["tstr"]["kinds"] if k not in KINDS]
    if bad:
        raise CliError(f"unknown classifier kind(s) {bad}")
    return cfg


def stage_seed(cfg: dict, stage: str) -> int:
    return derive_seed(cfg["seed"], stage)


def scenario_config(cfg: dict, kind: str) -> ScenarioConfig:
    section = dict(cfg["scenario"][kind])
    if "kind" in section and section["kind"] != kind:
        raise CliError(f"scenario.{kind}.kind must be {kind!r}")
    section["kind"] = kind
    section.setdefault("seed", stage_seed(cfg, f"fixture/{kind}"))
    return ScenarioConfig.from_dict(section)


def gan_config(cfg: dict, variant: str | None = None) -> GanConfig:
    section = dict(cfg["gan"])
    if variant is not None:
        section["variant"] = variant
    section.setdefault("seed", stage_seed(cfg, "train"))
    name = section.get("variant", "f2gan")
    if name != "f2gan":
        return GanConfig.baseline(name, **{k: v for k, v in section.items() if k != "variant"})
    return GanConfig.from_dict(section)


def _sigma(cfg):
    s = cfg["fidelity"]["sigma"]
    if s == "median":
        return s
    if isinstance(s, (int, float)) and s > 0:
        return float(s)
    raise CliError("fidelity.sigma must be 'median' or a positive number")


# -- outputs ----------------------------------------------------------------------

class Outputs:
    """Writes files atomically and remembers them so a failure can undo them."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.written = []

    def path(self, name) -> Path:
        return self.dir / name

    def _claim(self, name) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.path(name)
        self.written.append(p)
        return p

    def text(self, name, content: str) -> Path:
        p = self._claim(name)
        tmp = p.with_name(p.name + ".tmp")
        tmp.write_text(content, encoding="utf-8", newline="\n")
        os.replace(tmp, p)
        return p

    def json(self, name, obj) -> Path:
        return self.text(name, json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")

    def csv(self, name, ds) -> Path:
        p = self._claim(name)
        tmp = p.with_name(p.name + ".tmp")
        write_csv(ds, tmp)
        os.replace(tmp, p)
        return p

    def model(self, name, model) -> Path:
        p = self._claim(name)
        save_model(model, p)
        return p

    def rollback(self):
        for p in self.written:
            for q in (p, p.with_name(p.name + ".tmp")):
                if q.exists():
                    q.unlink()


def _plain(obj):
    return json.loads(canonical_json(obj))


def _echo(outputs: Outputs, command: str, cfg: dict, **resolved):
    outputs.json(f"{command}.config.json", {"command": command, "run_config": cfg, **resolved})


def _stem(path) -> str:
    stem = Path(path).stem
    return stem[:-len("_synthetic")] if stem.endswith("_synthetic") else stem


# -- commands -------------------------------------------------------------------------

def cmd_fixture(args, cfg, outputs):
    manifest = {"seed": cfg["seed"], "datasets": {}}
    resolved = {}
    frac = cfg["scenario"]["test_fraction"]
    for kind in cfg["scenario"]["kinds"]:
        sc = scenario_config(cfg, kind)
        resolved[kind] = sc.to_dict()
        ds = generate(sc)
        outputs.csv(f"{kind}.csv", ds)
        entry = {"file": f"{kind}.csv", "rows": ds.n_samples, "features": ds.n_features,
                 "seed": sc.seed,
                 "class_counts": dict(zip(ds.class_names, class_stats(ds).counts.tolist()))}
        if frac is not None:
            split_seed = stage_seed(cfg, f"split/{kind}")
            tr, te = train_test_split(ds, float(frac), split_seed)
            outputs.csv(f"{kind}_train.csv", tr)
            outputs.csv(f"{kind}_test.csv", te)
            entry["split"] = {"test_fraction": float(frac), "seed": split_seed,
                              "train_rows": tr.n_samples, "test_rows": te.n_samples}
        manifest["datasets"][kind] = entry
        print(f"{kind}: {ds.n_samples} rows, {ds.n_classes} classes -> {outputs.path(kind + '.csv')}")
    outputs.json("manifest.json", manifest)
    _echo(outputs, "fixture", cfg, scenario=resolved)


def cmd_train(args, cfg, outputs):
    ds = load_csv(args.data)
    gc = gan_config(cfg, args.variant)
    name = args.name or gc.variant
    model = train(ds, gc)
    outputs.model(f"{name}.json", model)
    lines = [",".join(model.log.COLUMNS)]
    lines += [",".join([str(int(r[0]))] + [repr(float(v)) for v in r[1:]]) for r in model.log.rows()]
    outputs.text(f"{name}_loss.csv", "\n".join(lines) + "\n")
    _echo(outputs, f"train_{name}", cfg, gan=gc.to_dict(), data=str(args.data))
    print(f"trained {gc.variant} for {gc.epochs} epochs -> {outputs.path(name + '.json')}")


def cmd_synth(args, cfg, outputs):
    model = load_model(args.model)
    seed = stage_seed(cfg, "synth")
    ds = synthesize_balanced(model, args.per_class, seed)
    name = _stem(args.model)
    outputs.csv(f"{name}_synthetic.csv", ds)
    _echo(outputs, f"synth_{name}", cfg, model=str(args.model), per_class=args.per_class,
          synth_seed=seed)
    print(f"{ds.n_samples} rows ({args.per_class} per class) -> {outputs.path(name + '_synthetic.csv')}")


def _load_pair(real_path, synth_paths):
    real = load_csv(real_path)
    synths = {}
    for p in synth_paths:
        s = load_csv(p, real.schema, real.class_names)
        synths[_stem(p)] = s
    return real, synths


def cmd_eval(args, cfg, outputs):
    real, synths = _load_pair(args.real, args.synth)
    sigma, bins = _sigma(cfg), int(cfg["fidelity"]["bins"])
    scaler = fit_scaler(real)
    rows = []
    for name, s in synths.items():
        rep = evaluate_fidelity(real, s, sigma=sigma, scaler=scaler)
        outputs.json(f"fidelity_{name}.json", rep.to_dict())
        outputs.json(f"histograms_{name}.json", export_histograms(real, s, bins))
        rows.append((name, rep))
    _echo(outputs, "eval", cfg, real=str(args.real), synth=[str(p) for p in args.synth])
    print(f"{'Model':<14}{'Wasserstein':>14}{'MMD':>12}{'KS':>10}")
    for name, rep in rows:
        print(f"{name:<14}{rep.average_wasserstein:>14.4f}{rep.mmd:>12.6f}{rep.average_ks:>10.4f}")


def cmd_tstr(args, cfg, outputs):
    real, synths = _load_pair(args.real_test, args.synth)
    kinds = tuple(cfg["tstr"]["kinds"])
    seed = stage_seed(cfg, "tstr")
    # features are scaled with real-data statistics, from the training split when given
    ref = load_csv(args.real_train, real.schema, real.class_names) if args.real_train else real
    scaler = fit_scaler(ref)
    reports = {}
    for name, s in synths.items():
        rep = run_tstr(s, real, kinds, seed, scaler, cfg["tstr"]["params"])
        outputs.json(f"tstr_{name}.json", rep.to_dict())
        reports[name] = rep
    _echo(outputs, "tstr", cfg, real_test=str(args.real_test),
          real_train=str(args.real_train) if args.real_train else None,
          synth=[str(p) for p in args.synth], tstr_seed=seed)
    print(format_table(reports, "accuracy"))


# -- entry point ----------------------------------------------------------------------

def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, help="run-config JSON")
    shared.add_argument("--out", type=Path, help="output directory (overrides paths.out_dir)")
    shared.add_argument("--seed", type=_u64, help="top-level seed (overrides the config)")

    parser = argparse.ArgumentParser(prog="tabsynth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", parents=[shared], help="write fixture CSVs and a manifest")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("train", parents=[shared], help="train a generator on a CSV")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--variant", choices=("f2gan", "cgan", "wgan_gp"),
                   help="overrides gan.variant")
    p.add_argument("--name", help="file stem for the model and log (default: variant)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("synth", parents=[shared], help="balanced synthesis from a model file")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--per-class", type=_positive, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", parents=[shared], help="fidelity metrics and histograms")
    p.add_argument("--real", type=Path, required=True)
    p.add_argument("--synth", type=Path, nargs="+", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("tstr", parents=[shared], help="train-on-synthetic, test-on-real")
    p.add_argument("--synth", type=Path, nargs="+", required=True)
    p.add_argument("--real-test", type=Path, required=True)
    p.add_argument("--real-train", type=Path,
                   help="real training split; its ranges scale the classifier inputs")
    p.set_defaults(func=cmd_tstr)
    return parser


EXPECTED_ERRORS = (CliError, ConfigError, DataFormatError, ModelFormatError, TrainingDivergence,
                   ValueError, OSError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    outputs = None
    try:
        cfg = load_run_config(args.config, args.seed, args.out)
        outputs = Outputs(cfg["paths"]["out_dir"])
        with np.errstate(over="ignore", invalid="ignore"):
            args.func(args, cfg, outputs)
    except EXPECTED_ERRORS as exc:
        if outputs is not None:
            outputs.rollback()
        print(f"tabsynth {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
