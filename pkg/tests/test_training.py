import numpy as np
import pytest

from tabsynth.data import Dataset, FeatureSchema, class_stats, fit_scaler
from tabsynth.fidelity import evaluate_fidelity
from tabsynth.genmodels import (ConfigError, GanConfig, TrainingDivergence, synthesize_balanced,
                                train)
from tabsynth.genmodels.io import dumps_model
from tabsynth.numerics import SeededRng

SMALL = dict(latent_dim=4, gen_hidden=(16,), disc_hidden=(16, 8), batch_size=32)


def toy(n_per_class=100, seed=0):
    rng = SeededRng(seed)
    a = rng.normal((n_per_class, 2), loc=-1.0, scale=0.5)
    b = rng.normal((n_per_class, 2), loc=2.0, scale=0.3)
    b[:, 1] = 0.5 * b[:, 0] + rng.normal(n_per_class, scale=0.1)
    y = np.repeat([0, 1], n_per_class)
    return Dataset(np.vstack([a, b]), y, FeatureSchema(("x1", "x2")), ("A", "B"))


def test_zero_epochs_returns_untrained_model():
    m = train(toy(20), GanConfig(epochs=0, **SMALL))
    assert len(m.log) == 0
    fresh = train(toy(20), GanConfig(epochs=0, **SMALL))
    assert dumps_model(m) == dumps_model(fresh)


def test_same_seed_same_parameters():
    cfg = GanConfig(epochs=3, seed=11, **SMALL)
    assert dumps_model(train(toy(40), cfg)) == dumps_model(train(toy(40), cfg))
    other = GanConfig(epochs=3, seed=12, **SMALL)
    assert dumps_model(train(toy(40), cfg)) != dumps_model(train(toy(40), other))


def test_log_has_one_row_per_epoch():
    m = train(toy(40), GanConfig(epochs=4, **SMALL))
    rows = m.log.rows()
    assert [r[0] for r in rows] == [1, 2, 3, 4]
    for r in rows:
        assert np.all(np.isfinite(r))
        # L_G = L_adv + lambda_mv L_MV + lambda_corr L_corr, averaged per epoch
        assert r[5] == pytest.approx(r[2] + m.config.lambda_mv * r[3] + m.config.lambda_corr * r[4])


def test_ablation_identity_is_bit_exact():
    ds = toy(40)
    f = train(ds, GanConfig(variant="f2gan", lambda_mv=0, lambda_corr=0, epochs=3, **SMALL))
    c = train(ds, GanConfig.baseline("cgan", epochs=3, **SMALL))
    assert dumps_model(f) == dumps_model(c)


def test_cgan_rejects_feedback_weights():
    with pytest.raises(ConfigError):
        GanConfig(variant="cgan", lambda_mv=1.0)


@pytest.mark.parametrize("variant", ["f2gan", "cgan", "wgan_gp"])
def test_clipped_norms_never_exceed_gamma(variant):
    norms = []
    cfg = GanConfig.baseline(variant, epochs=2, critic_steps=2, **SMALL)
    train(toy(40), cfg, on_update=lambda name, n: norms.append((name, n)))
    assert {n for n, _ in norms} == {"generator", "discriminator"}
    assert max(n for _, n in norms) <= cfg.clip * (1 + 1e-12)
    n_gen = sum(1 for name, _ in norms if name == "generator")
    n_disc = len(norms) - n_gen
    assert n_disc == n_gen * (2 if variant == "wgan_gp" else 1)


def test_class_with_one_sample_is_rejected():
    ds = toy(10)
    ds = ds.subset(np.arange(11))  # class B keeps one row
    with pytest.raises(ConfigError, match="at least 2"):
        train(ds, GanConfig(epochs=1, **SMALL))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reports_epoch_and_batch():
    ds = toy(20)
    ds = Dataset(ds.X * 1e300, ds.y, ds.schema, ds.class_names)
    with pytest.raises(TrainingDivergence) as info:
        # the scaler is fitted elsewhere so the scaled features overflow
        train(ds, GanConfig(epochs=1, **SMALL), scaler=fit_scaler(toy(20)))
    assert info.value.epoch == 1 and info.value.batch == 0


def test_balanced_synthesis_counts_bounds_and_determinism():
    ds = toy(30)
    m = train(ds, GanConfig(epochs=2, **SMALL))
    s = synthesize_balanced(m, 5, seed=3)
    assert s.n_samples == 10
    np.testing.assert_array_equal(class_stats(s).counts, [5, 5])
    assert np.all(s.X >= m.scaler.min) and np.all(s.X <= m.scaler.max)
    np.testing.assert_array_equal(s.X, synthesize_balanced(m, 5, seed=3).X)
    with pytest.raises(ValueError):
        synthesize_balanced(m, 0, seed=3)


def test_training_moves_synthetic_data_towards_real():
    ds = toy(100)
    cfg = GanConfig(epochs=200, **SMALL)
    before = train(ds, GanConfig(epochs=0, **SMALL))
    after = train(ds, cfg)
    w0 = evaluate_fidelity(ds, synthesize_balanced(before, 100, 1)).average_wasserstein
    w1 = evaluate_fidelity(ds, synthesize_balanced(after, 100, 1)).average_wasserstein
    assert w1 < w0
