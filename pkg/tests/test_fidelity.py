import math

import numpy as np
import pytest

import oracles
from tabsynth.data import Dataset, FeatureSchema
from tabsynth.fidelity import (delta_stat, evaluate_fidelity, export_histograms, ks_statistic,
                               median_bandwidth, mmd_gaussian, wasserstein_1d)
from tabsynth.numerics import SeededRng
from tabsynth.scenario import ScenarioConfig, generate_external, generate_internal


def random_pair(rng):
    n, m = 1 + int(rng.integers(50)), 1 + int(rng.integers(50))
    # coarse rounding forces ties inside and across the samples
    a = np.round(rng.normal(n) * 3) / 2
    b = np.round(rng.normal(m, loc=0.3) * 3) / 2
    return a, b


def test_wasserstein_hand_cases():
    assert wasserstein_1d([1, 2, 3], [1, 2, 3]) == 0.0
    assert wasserstein_1d([1, 2, 3], [2, 3, 4]) == pytest.approx(1.0)
    assert wasserstein_1d([0, 0], [1, 1]) == pytest.approx(1.0)


def test_ks_hand_cases():
    assert ks_statistic([4, 1], [1, 4]) == 0.0
    assert ks_statistic([0, 0], [1, 1]) == 1.0
    assert ks_statistic([1, 2], [1, 3]) == pytest.approx(0.5)


def test_metric_oracles_small_batch():
    rng = SeededRng(17)
    for _ in range(100):
        a, b = random_pair(rng)
        assert abs(wasserstein_1d(a, b) - oracles.wasserstein_brute(list(a), list(b))) <= 1e-10
        assert abs(ks_statistic(a, b) - oracles.ks_brute(list(a), list(b))) <= 1e-10


def test_metrics_symmetric_and_nonnegative():
    rng = SeededRng(2)
    A, B = rng.normal((20, 3)), rng.normal((15, 3), loc=0.5)
    assert wasserstein_1d(A[:, 0], B[:, 0]) == pytest.approx(wasserstein_1d(B[:, 0], A[:, 0]))
    assert ks_statistic(A[:, 0], B[:, 0]) == ks_statistic(B[:, 0], A[:, 0])
    assert mmd_gaussian(A, B) == pytest.approx(mmd_gaussian(B, A), abs=1e-15)
    assert mmd_gaussian(A, B) > 0


def test_mmd_hand_cases():
    A = SeededRng(0).normal((12, 4))
    assert abs(mmd_gaussian(A, A.copy())) <= 1e-12
    assert mmd_gaussian([[0.0]], [[1.0]], sigma=1.0) == pytest.approx(2 - 2 * math.exp(-1), abs=1e-12)


def test_mmd_against_brute_force():
    rng = SeededRng(5)
    A, B = rng.normal((9, 2)), rng.normal((7, 2), scale=1.5)
    expected = oracles.mmd_brute(A.tolist(), B.tolist(), 0.8)
    assert mmd_gaussian(A, B, sigma=0.8) == pytest.approx(expected, abs=1e-12)


def test_mmd_blocks_agree_with_single_pass():
    rng = SeededRng(6)
    A, B = rng.normal((1500, 2)), rng.normal((1100, 2), loc=0.1)
    sigma = 1.3
    expected = (np.exp(-((A[:, None] - A[None]) ** 2).sum(-1) / sigma**2).mean()
                + np.exp(-((B[:, None] - B[None]) ** 2).sum(-1) / sigma**2).mean()
                - 2 * np.exp(-((A[:, None] - B[None]) ** 2).sum(-1) / sigma**2).mean())
    assert mmd_gaussian(A, B, sigma) == pytest.approx(expected, rel=1e-9)


def test_median_bandwidth_degenerate():
    P = np.ones((4, 2))
    assert median_bandwidth(P, P) == 1.0
    assert median_bandwidth(np.array([[0.0]]), np.array([[3.0]])) == pytest.approx(3.0)


def test_mmd_rejects_bad_sigma():
    with pytest.raises(ValueError):
        mmd_gaussian([[0.0]], [[1.0]], sigma=0.0)


def test_delta_stat_hand_cases():
    Xr = np.array([[0.0], [2.0]])
    Xg = np.array([[0.0], [0.0]])
    assert delta_stat(Xr, Xg) == pytest.approx(2.0)
    R = SeededRng(1).normal((10, 3))
    assert delta_stat(R, R) == 0.0
    G = SeededRng(2).normal((8, 3))
    assert delta_stat(R, G) == pytest.approx(delta_stat(R[::-1], G[[3, 1, 0, 2, 7, 6, 5, 4]]))


def test_evaluate_fidelity_identity_and_determinism():
    ds = generate_internal(ScenarioConfig(kind="internal", samples_total=240, seed=0))
    rep = evaluate_fidelity(ds, ds)
    assert rep.average_wasserstein == 0 and rep.average_ks == 0
    assert abs(rep.mmd) <= 1e-12 and rep.delta_stat == 0
    other = generate_internal(ScenarioConfig(kind="internal", samples_total=240, seed=1))
    assert evaluate_fidelity(ds, other).to_dict() == evaluate_fidelity(ds, other).to_dict()
    d = evaluate_fidelity(ds, other).to_dict()
    assert set(d) == {"per_feature", "mmd", "mmd_sigma", "averages", "delta_stat", "sample_counts"}
    assert len(d["per_feature"]) == ds.n_features


def test_evaluate_fidelity_schema_mismatch():
    a = generate_internal(ScenarioConfig(kind="internal", samples_total=24))
    b = generate_external(ScenarioConfig(samples_total=60))
    with pytest.raises(ValueError):
        evaluate_fidelity(a, b)


def test_histograms_normalised_and_identical_for_same_data():
    ds = generate_internal(ScenarioConfig(kind="internal", samples_total=120, seed=4))
    h = export_histograms(ds, ds, bins=16)
    assert h["bins"] == 16
    for s in h["series"]:
        width = np.diff(s["bin_edges"])
        assert abs(np.sum(np.array(s["real_density"]) * width) - 1) <= 1e-9
        assert s["real_density"] == s["synthetic_density"]


def test_histogram_constant_feature():
    schema = FeatureSchema(("x",), "label")
    ds = Dataset(np.full((5, 1), 2.5), np.zeros(5, dtype=int), schema, ("A",))
    (s,) = export_histograms(ds, ds, bins=8)["series"]
    mass = np.array(s["real_density"]) * np.diff(s["bin_edges"])
    assert np.count_nonzero(mass) == 1
    assert mass.sum() == pytest.approx(1.0)
