"""
The whole pipeline from one seed
================================

Runs the command-line stages in order: fixtures with a held-out split, three
generators (feedback GAN, conditional GAN, WGAN-GP) on each fixture, balanced
synthesis, fidelity evaluation and train-on-synthetic/test-on-real. The
fidelity and TSTR tables printed at the end are the repo's headline
comparison. Everything lands under the output directory together with the
echoed configs.

    python demos/04_end_to_end.py [out_dir] [seed] [epochs]
"""
import json
import sys
from pathlib import Path

from tabsynth.cli import main

out = Path(sys.argv[1] if len(sys.argv) > 1 else "e2e_out")
seed = sys.argv[2] if len(sys.argv) > 2 else "0"
epochs = int(sys.argv[3]) if len(sys.argv) > 3 else 100

config = out / "run_config.json"
out.mkdir(parents=True, exist_ok=True)
config.write_text(json.dumps({
    "scenario": {"test_fraction": 0.25},
    "gan": {"epochs": epochs},
}, indent=2))


def step(*argv):
    argv = [str(a) for a in argv] + ["--config", str(config), "--seed", seed]
    print("$ tabsynth", " ".join(argv))
    if main(argv) != 0:
        sys.exit(f"stage failed: {argv[0]}")


step("fixture", "--out", out)
variants = ("f2gan", "cgan", "wgan_gp")
for kind, per_class in (("external", 150), ("internal", 125)):
    d = out / kind
    for v in variants:
        step("train", "--out", d, "--data", out / f"{kind}_train.csv", "--variant", v)
        step("synth", "--out", d, "--model", d / f"{v}.json", "--per-class", per_class)
    synth = [d / f"{v}_synthetic.csv" for v in variants]
    step("eval", "--out", d, "--real", out / f"{kind}_train.csv", "--synth", *synth)
    step("tstr", "--out", d, "--real-test", out / f"{kind}_test.csv",
         "--real-train", out / f"{kind}_train.csv", "--synth", *synth)
