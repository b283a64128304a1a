"""Adversarial training with statistical feedback, and balanced synthesis.

Per mini-batch the discriminator is updated once on fresh noise, then the
generator is updated on new noise against the adversarial term plus the
mean/std and correlation feedback computed on discriminator embeddings.
The WGAN-GP variant replaces the discriminator step with ``critic_steps``
critic updates under a gradient penalty.
"""
from __future__ import annotations

import numpy as np

from ..data import Dataset, ScalerParams, apply_scale, batch_indices, class_stats, fit_scaler
from ..numerics import (AdamState, MlpParams, NumericError, SeededRng, adam_step,
                        clip_gradients, global_norm, input_gradient_penalty, mlp_backward)
from . import losses as L
from .models import (ConfigError, DiscriminatorModel, GanConfig, GeneratorModel,
                     TrainedGan, TrainingLog)


class TrainingDivergence(FloatingPointError):
    def __init__(self, message, epoch, batch):
        super().__init__(f"{message} (epoch {epoch}, batch {batch})")
        self.epoch = epoch
        self.batch = batch


def _add(*terms: MlpParams) -> MlpParams:
    return MlpParams([sum(ws) for ws in zip(*(t.weights for t in terms))],
                     [sum(bs) for bs in zip(*(t.biases for t in terms))])


# -- losses with gradients, as pure functions of (networks, batch, noise) -------

def discriminator_objective(G: GeneratorModel, D: DiscriminatorModel, xr, y, z, alpha):
    """Smoothed BCE of D on a real batch and G(z, y); returns ``(loss, dL/dD)``."""
    xf, _ = G.forward(z, y)
    lr, _, cache_r = D.forward(xr, y)
    lf, _, cache_f = D.forward(xf, y)
    loss = L.discriminator_loss(lr, lf, alpha)
    g_r, g_f = L.discriminator_loss_grad(lr, lf, alpha)
    grads_r, _ = mlp_backward(D.params, D.spec, cache_r, g_r[:, None])
    grads_f, _ = mlp_backward(D.params, D.spec, cache_f, g_f[:, None])
    return loss, _add(grads_r, grads_f)


def critic_objective(G: GeneratorModel, D: DiscriminatorModel, xr, y, z, u, gp_weight):
    """WGAN-GP critic loss on interpolates ``u*xr + (1-u)*G(z, y)``; returns ``(loss, dL/dD)``."""
    n = len(y)
    xf, _ = G.forward(z, y)
    xhat = u * xr + (1.0 - u) * xf
    sr, _, cache_r = D.forward(xr, y)
    sf, _, cache_f = D.forward(xf, y)
    _, grads_gp, norms = input_gradient_penalty(
        D.params, D.spec, D.inputs(xhat, y), D.n_features, gp_weight)
    loss = L.wgan_gp_critic_loss(sr, sf, norms, gp_weight)
    grads_r, _ = mlp_backward(D.params, D.spec, cache_r, np.full((n, 1), -1.0 / n))
    grads_f, _ = mlp_backward(D.params, D.spec, cache_f, np.full((n, 1), 1.0 / n))
    return loss, _add(grads_r, grads_f, grads_gp)


def _adversarial(cfg: GanConfig, logits):
    if cfg.variant == "wgan_gp":
        return L.wgan_generator_loss(logits), np.full(logits.size, -1.0 / logits.size)
    if cfg.generator_objective == "nonsaturating":
        return L.nonsaturating_loss_g(logits), L.nonsaturating_loss_g_grad(logits)
    return L.adversarial_loss_g(logits), L.adversarial_loss_g_grad(logits)


def generator_objective(G: GeneratorModel, D: DiscriminatorModel, xr, y, z, cfg: GanConfig):
    """Adversarial term plus weighted feedback on D's embeddings.

    Returns ``((adv, mv, corr, total), dL/dG)``; the real embeddings are
    constants, D's parameters are not differentiated.
    """
    xg, cache_g = G.forward(z, y)
    lg, F_g, cache_d = D.forward(xg, y)
    _, F_r, _ = D.forward(xr, y)
    adv, g_logit = _adversarial(cfg, lg)
    mv = L.mv_feedback(F_r, F_g)
    corr = L.corr_feedback(F_r, F_g)
    hidden = {}
    if cfg.lambda_mv or cfg.lambda_corr:
        g_feat = np.zeros_like(F_g)
        if cfg.lambda_mv:
            g_feat += cfg.lambda_mv * L.mv_feedback_grad(F_r, F_g)
        if cfg.lambda_corr:
            g_feat += cfg.lambda_corr * L.corr_feedback_grad(F_r, F_g)
        hidden[D.feature_layer] = g_feat
    _, g_in = mlp_backward(D.params, D.spec, cache_d, g_logit[:, None], hidden)
    grads, _ = mlp_backward(G.params, G.spec, cache_g, g_in[:, :D.n_features])
    total = L.generator_loss(adv, mv, corr, cfg.lambda_mv, cfg.lambda_corr)
    return (adv, mv, corr, total), grads


class _Trainer:
    def __init__(self, ds: Dataset, config: GanConfig, scaler: ScalerParams, on_update=None):
        self.cfg = config
        self.ds = apply_scale(ds, scaler)
        self.scaler = scaler
        self.on_update = on_update
        root = SeededRng(config.seed)
        init_rng = root.spawn("init")
        self.batch_rng = root.spawn("batches")
        self.noise_rng = root.spawn("noise")
        C, d = ds.n_classes, ds.n_features
        self.G = GeneratorModel.build(config.latent_dim, C, d, config.gen_hidden, init_rng)
        self.D = DiscriminatorModel.build(d, C, config.disc_hidden, init_rng)
        opt = dict(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
        self.opt_g = AdamState(**opt)
        self.opt_d = AdamState(**opt)

    def _update(self, name, params, grads, state):
        grads = clip_gradients(grads, self.cfg.clip)
        if self.on_update is not None:
            self.on_update(name, global_norm(grads))
        adam_step(params, grads, state)

    def _noise(self, n):
        return self.noise_rng.normal((n, self.cfg.latent_dim))

    def discriminator_step(self, xr, y):
        loss, grads = discriminator_objective(self.G, self.D, xr, y, self._noise(len(y)),
                                              self.cfg.label_smoothing)
        self._update("discriminator", self.D.params, grads, self.opt_d)
        return loss

    def critic_step(self, xr, y):
        z = self._noise(len(y))
        u = self.noise_rng.uniform((len(y), 1))
        loss, grads = critic_objective(self.G, self.D, xr, y, z, u, self.cfg.gp_weight)
        self._update("discriminator", self.D.params, grads, self.opt_d)
        return loss

    def generator_step(self, xr, y):
        values, grads = generator_objective(self.G, self.D, xr, y, self._noise(len(y)), self.cfg)
        self._update("generator", self.G.params, grads, self.opt_g)
        return values

    def run(self) -> TrainingLog:
        cfg = self.cfg
        log = TrainingLog()
        X, Y = self.ds.X, self.ds.y
        for epoch in range(1, cfg.epochs + 1):
            sums = np.zeros(5)
            n_batches = 0
            for b, idx in enumerate(batch_indices(len(Y), cfg.batch_size, self.batch_rng)):
                if idx.size < 2:
                    continue  # batch statistics need two rows
                xr, y = X[idx], Y[idx]
                try:
                    if cfg.variant == "wgan_gp":
                        for _ in range(cfg.critic_steps):
                            ld = self.critic_step(xr, y)
                    else:
                        ld = self.discriminator_step(xr, y)
                    vals = (ld, *self.generator_step(xr, y))
                except NumericError as exc:
                    raise TrainingDivergence(str(exc), epoch, b) from exc
                if not np.all(np.isfinite(vals)):
                    raise TrainingDivergence("non-finite loss", epoch, b)
                sums += vals
                n_batches += 1
            log.append(epoch, *(sums / max(n_batches, 1)))
        return log


def train(ds: Dataset, config: GanConfig, scaler: ScalerParams | None = None,
          on_update=None) -> TrainedGan:
    """Fit a conditional generator/discriminator pair on ``ds`` (original units).

    Features are scaled to [-1, 1] with ``scaler`` (fitted on ``ds`` when not
    given). ``on_update(network, grad_norm)`` is called right before every
    optimizer update with the post-clip global gradient norm.
    """
    counts = class_stats(ds).counts
    if np.any(counts < 2):
        bad = [ds.class_names[c] for c in np.flatnonzero(counts < 2)]
        raise ConfigError(f"every class needs at least 2 samples; too few for {bad}")
    scaler = scaler if scaler is not None else fit_scaler(ds)
    trainer = _Trainer(ds, config, scaler, on_update)
    log = trainer.run()
    return TrainedGan(config, trainer.G, trainer.D, scaler, ds.class_names, ds.schema, log)


def synthesize_balanced(model: TrainedGan, per_class: int, seed: int) -> Dataset:
    """Exactly ``per_class`` generated rows per class, in original units."""
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    rng = SeededRng(seed)
    G = model.generator
    blocks, labels = [], []
    for c in range(model.n_classes):
        y = np.full(per_class, c)
        out, _ = G.forward(rng.normal((per_class, G.latent_dim)), y)
        blocks.append(out)
        labels.append(y)
    X = model.scaler.inverse(np.vstack(blocks))
    # guard the inverse map's rounding so rows stay inside the fitted range
    X = np.clip(X, model.scaler.min, model.scaler.max)
    return Dataset(X, np.concatenate(labels), model.schema, model.class_names)
