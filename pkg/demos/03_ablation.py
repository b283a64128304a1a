"""
Does the feedback help?
=======================

Trains the feedback GAN and its lambda = 0 ablation (a plain conditional GAN)
on the external fixture with three seeds each, then compares the per-feature
Wasserstein distance between real and balanced synthetic data. This is the
same protocol as acceptance criterion 3. It takes about five minutes on one
core.
"""
import statistics
import sys

from tabsynth.data import fit_scaler, train_test_split
from tabsynth.fidelity import evaluate_fidelity
from tabsynth.genmodels import GanConfig, synthesize_balanced, train
from tabsynth.scenario import ScenarioConfig, generate

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 100

ds = generate(ScenarioConfig(kind="external"))
tr, te = train_test_split(ds, 0.25, seed=0)
scaler = fit_scaler(tr)
k = tr.n_samples // tr.n_classes

w = {"f2gan": [], "cgan": []}
for seed in (0, 1, 2):
    for variant in w:
        model = train(tr, GanConfig.baseline(variant, epochs=epochs, seed=seed), scaler)
        rep = evaluate_fidelity(tr, synthesize_balanced(model, k, seed=100 + seed))
        w[variant].append(rep.average_wasserstein)
        print(f"{variant:6s} seed {seed}: W={rep.average_wasserstein:7.2f}  KS={rep.average_ks:.4f}"
              f"  MMD={rep.mmd:.5f}  delta_stat={rep.delta_stat:.3g}")

for variant, values in w.items():
    print(variant, "median W:", round(statistics.median(values), 2))
