"""GAN losses and their analytic gradients.

Every function returns the loss value; the ``*_grad`` companions return
the gradient with respect to the non-constant inputs (logits, scores or
the generated feature batch). Means run over the batch axis.
"""
from __future__ import annotations

import numpy as np

from ..numerics import sigmoid, softplus

LOG_FLOOR = np.log(1e-12)
DEGENERATE_STD = 1e-8


def _logits(x):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise ValueError("empty logit batch")
    return x


# -- adversarial ------------------------------------------------------------

def adversarial_loss_g(fake_logits) -> float:
    """mean log(1 - sigmoid(l)), each term floored at log(1e-12)."""
    l = _logits(fake_logits)
    return float(np.mean(np.maximum(-softplus(l), LOG_FLOOR)))


def adversarial_loss_g_grad(fake_logits):
    l = _logits(fake_logits)
    active = -softplus(l) > LOG_FLOOR
    return np.where(active, -sigmoid(l), 0.0) / l.size


def nonsaturating_loss_g(fake_logits) -> float:
    """-mean log sigmoid(l), the common non-saturating alternative."""
    l = _logits(fake_logits)
    return float(np.mean(softplus(-l)))


def nonsaturating_loss_g_grad(fake_logits):
    l = _logits(fake_logits)
    return -sigmoid(-l) / l.size


def discriminator_loss(real_logits, fake_logits, alpha: float = 1.0) -> float:
    """Binary cross-entropy with the real target smoothed to ``alpha``, fake target 0."""
    lr, lf = _logits(real_logits), _logits(fake_logits)
    # log sigmoid(l) = -softplus(-l); log(1 - sigmoid(l)) = -softplus(l)
    real = alpha * softplus(-lr) + (1.0 - alpha) * softplus(lr)
    return float(np.mean(real) + np.mean(softplus(lf)))


def discriminator_loss_grad(real_logits, fake_logits, alpha: float = 1.0):
    lr, lf = _logits(real_logits), _logits(fake_logits)
    return (sigmoid(lr) - alpha) / lr.size, sigmoid(lf) / lf.size


# -- Wasserstein ------------------------------------------------------------

def wgan_gp_critic_loss(real_scores, fake_scores, grad_norms, gp_weight: float) -> float:
    """mean(fake) - mean(real) + gp_weight * mean((||grad|| - 1)^2)."""
    real, fake = _logits(real_scores), _logits(fake_scores)
    norms = np.asarray(grad_norms, dtype=np.float64).reshape(-1)
    penalty = float(np.mean((norms - 1.0) ** 2)) if norms.size else 0.0
    return float(np.mean(fake) - np.mean(real)) + gp_weight * penalty


def wgan_generator_loss(fake_scores) -> float:
    return -float(np.mean(_logits(fake_scores)))


# -- statistical feedback on feature embeddings ------------------------------

def _moments(F):
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] < 2:
        raise ValueError("feature statistics need a 2-D batch with at least 2 rows")
    mu = F.mean(axis=0)
    sd = np.sqrt(np.mean((F - mu) ** 2, axis=0))
    return F, mu, sd


def correlation_matrix(F):
    """Pearson correlation of the columns of ``F`` (population moments).

    Columns with std below 1e-8 get 0 off the diagonal and 1 on it.
    """
    F, mu, sd = _moments(F)
    ok = sd >= DEGENERATE_STD
    Z = np.where(ok, (F - mu) / np.where(ok, sd, 1.0), 0.0)
    rho = Z.T @ Z / F.shape[0]
    np.fill_diagonal(rho, 1.0)
    return rho


def mv_feedback(F_r, F_g) -> float:
    """||mu_r - mu_g||^2 + ||sigma_r - sigma_g||^2 with population std."""
    _, mu_r, sd_r = _moments(F_r)
    _, mu_g, sd_g = _moments(F_g)
    if mu_r.shape != mu_g.shape:
        raise ValueError("feature dimensions differ")
    return float(np.sum((mu_r - mu_g) ** 2) + np.sum((sd_r - sd_g) ** 2))


def mv_feedback_grad(F_r, F_g):
    """Gradient with respect to ``F_g``; ``F_r`` is treated as constant."""
    _, mu_r, sd_r = _moments(F_r)
    F, mu_g, sd_g = _moments(F_g)
    n = F.shape[0]
    g_mu = -2.0 * (mu_r - mu_g) / n
    # d sigma_j / d F_ij = (F_ij - mu_j) / (n sigma_j); zero where sigma vanishes
    ok = sd_g > 0
    dsd = np.where(ok, (F - mu_g) / (n * np.where(ok, sd_g, 1.0)), 0.0)
    return g_mu + (-2.0 * (sd_r - sd_g)) * dsd


def corr_feedback(F_r, F_g) -> float:
    """Squared Frobenius distance between the two correlation matrices."""
    rho_r, rho_g = correlation_matrix(F_r), correlation_matrix(F_g)
    if rho_r.shape != rho_g.shape:
        raise ValueError("feature dimensions differ")
    return float(np.sum((rho_r - rho_g) ** 2))


def corr_feedback_grad(F_r, F_g):
    """Gradient with respect to ``F_g``; ``F_r`` is treated as constant."""
    rho_r = correlation_matrix(F_r)
    F, mu, sd = _moments(F_g)
    n = F.shape[0]
    ok = sd >= DEGENERATE_STD
    safe = np.where(ok, sd, 1.0)
    Z = np.where(ok, (F - mu) / safe, 0.0)
    rho_g = Z.T @ Z / n
    np.fill_diagonal(rho_g, 1.0)
    G = -2.0 * (rho_r - rho_g)
    np.fill_diagonal(G, 0.0)
    G[~ok, :] = 0.0
    G[:, ~ok] = 0.0
    dZ = 2.0 * Z @ G / n
    # backward through z = (x - mu) / sd with population sd
    dX = (dZ - dZ.mean(axis=0) - Z * np.mean(dZ * Z, axis=0)) / safe
    return np.where(ok, dX, 0.0)


def generator_loss(adv: float, mv: float, corr: float, lambda_mv: float, lambda_corr: float) -> float:
    if lambda_mv < 0 or lambda_corr < 0:
        raise ValueError("feedback weights must be non-negative")
    return adv + lambda_mv * mv + lambda_corr * corr
