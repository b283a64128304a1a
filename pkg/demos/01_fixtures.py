"""
A look at the fault fixtures
============================

Both fixtures come from a closed-form response model (docs/response_model.md).
This walks through what a fault does to the RMS features, then checks that the
classes can be told apart before any GAN is involved.
"""
import numpy as np

from tabsynth.data import class_stats, fit_scaler, train_test_split
from tabsynth.scenario import (ScenarioConfig, apply_imbalance, external_response, generate,
                               internal_response)
from tabsynth.tstr import fit_classifier

# %% a single line-to-ground fault on phase a of line 12, swept over R_f
# the faulted voltage sags less and the fault current shrinks as R_f grows
for r_f in (0.1, 1.0, 5.0):
    row = external_response("L12_LGa", r_f, irradiance=0.6, load=0.8)
    V, I = row[:9].reshape(3, 3), row[9:].reshape(3, 3)
    print(f"R_f={r_f:4.1f}  V12 = {np.round(V[0]).astype(int)}  I12 = {np.round(I[0]).astype(int)}")

# %% open switch S1 starves phase a, and its neighbours pick up the slack
for name in ("S1", "S4", "S1S4"):
    print(name, np.round(internal_response(name, irradiance=0.6, load=0.8), 1))

# %% the default datasets
ext = generate(ScenarioConfig(kind="external"))
internal = generate(ScenarioConfig(kind="internal"))
for ds in (ext, internal):
    cs = class_stats(ds)
    print(f"{ds.n_samples} rows, {ds.n_features} features, {ds.n_classes} classes,"
          f" counts {cs.counts.min()}..{cs.counts.max()}")

# %% forcing scarcity: keep 10% of two classes
skewed = apply_imbalance(ext, ["L12_LGa", "L23_LLL"], 0.1, seed=0)
print("min ratio after skew:", class_stats(skewed).ratios.min())

# %% learnability: 1-NN on a held-out split
for ds in (ext, internal):
    tr, te = train_test_split(ds, 0.25, seed=0)
    clf = fit_classifier("knn", tr, k=1, scaler=fit_scaler(tr))
    print("1-NN accuracy:", np.mean(clf.predict(te.X) == te.y))
