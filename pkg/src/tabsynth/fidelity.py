"""Distributional fidelity between a real and a synthetic dataset.

Per-feature Wasserstein-1 and Kolmogorov-Smirnov distances (original
units), a dataset-level Gaussian-kernel MMD on [-1, 1]-scaled features,
the aggregate moment/correlation mismatch, and binned density export.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .data import Dataset, ScalerParams, fit_scaler
from .genmodels.losses import correlation_matrix

MEDIAN_SUBSAMPLE = 1000
MMD_BLOCK = 1024


def _sample(a):
    a = np.asarray(a, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("empty sample")
    return a


def _ecdfs(a, b):
    a, b = np.sort(_sample(a)), np.sort(_sample(b))
    grid = np.union1d(a, b)
    Fa = np.searchsorted(a, grid, side="right") / a.size
    Fb = np.searchsorted(b, grid, side="right") / b.size
    return grid, Fa, Fb


def wasserstein_1d(a, b) -> float:
    """Exact W1 between two empirical distributions: integral of |F_a - F_b|."""
    grid, Fa, Fb = _ecdfs(a, b)
    return float(np.sum(np.abs(Fa - Fb)[:-1] * np.diff(grid)))


def ks_statistic(a, b) -> float:
    """sup |F_a - F_b| over the merged sample grid (right-continuous CDFs)."""
    _, Fa, Fb = _ecdfs(a, b)
    return float(np.max(np.abs(Fa - Fb)))


def _sq_dists(A, B):
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def median_bandwidth(A, B) -> float:
    """Median pairwise Euclidean distance of the pooled sample (off-diagonal).

    Pools of more than 1000 rows are thinned to 1000 evenly spaced rows
    first. Returns 1.0 when every pooled point coincides.
    """
    P = np.vstack([A, B])
    if P.shape[0] > MEDIAN_SUBSAMPLE:
        P = P[np.linspace(0, P.shape[0] - 1, MEDIAN_SUBSAMPLE).astype(int)]
    iu = np.triu_indices(P.shape[0], k=1)
    d = np.sqrt(_sq_dists(P, P)[iu])
    med = float(np.median(d)) if d.size else 0.0
    return med if med > 0 else 1.0


def _kernel_mean(A, B, sigma):
    total = 0.0
    for i in range(0, A.shape[0], MMD_BLOCK):
        total += np.exp(-_sq_dists(A[i:i + MMD_BLOCK], B) / sigma**2).sum()
    return total / (A.shape[0] * B.shape[0])


def mmd_gaussian(A, B, sigma="median") -> float:
    """Biased (V-statistic) MMD^2 with k(x, y) = exp(-||x - y||^2 / sigma^2)."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError("feature dimensions differ")
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("empty sample")
    if isinstance(sigma, str):
        if sigma != "median":
            raise ValueError(f"unknown bandwidth policy {sigma!r}")
        sigma = median_bandwidth(A, B)
    if not sigma > 0:
        raise ValueError("bandwidth must be positive")
    return float(_kernel_mean(A, A, sigma) + _kernel_mean(B, B, sigma)
                 - 2.0 * _kernel_mean(A, B, sigma))


def delta_stat(X_r, X_g) -> float:
    """||mu_r - mu_g||^2 + ||var_r - var_g||^2 + ||rho_r - rho_g||_F^2."""
    X_r, X_g = np.asarray(X_r, dtype=np.float64), np.asarray(X_g, dtype=np.float64)
    if X_r.ndim != 2 or X_g.ndim != 2 or X_r.shape[1] != X_g.shape[1]:
        raise ValueError("need two matrices with equal column counts")
    if X_r.shape[0] < 2 or X_g.shape[0] < 2:
        raise ValueError("need at least two rows in each matrix")
    mu = np.sum((X_r.mean(0) - X_g.mean(0)) ** 2)
    var = np.sum((X_r.var(0) - X_g.var(0)) ** 2)
    corr = np.sum((correlation_matrix(X_r) - correlation_matrix(X_g)) ** 2)
    return float(mu + var + corr)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureFidelity:
    feature_name: str
    wasserstein: float
    ks: float


@dataclass(frozen=True)
class FidelityReport:
    per_feature: tuple
    mmd: float
    mmd_sigma: float
    average_wasserstein: float
    average_ks: float
    delta_stat: float
    n_real: int
    n_synthetic: int

    def to_dict(self) -> dict:
        return {
            "per_feature": [asdict(f) for f in self.per_feature],
            "mmd": self.mmd,
            "mmd_sigma": self.mmd_sigma,
            "averages": {"wasserstein": self.average_wasserstein, "ks": self.average_ks},
            "delta_stat": self.delta_stat,
            "sample_counts": {"real": self.n_real, "synthetic": self.n_synthetic},
        }


def _check_schemas(real: Dataset, synth: Dataset):
    if real.schema != synth.schema:
        raise ValueError("real and synthetic datasets have different schemas")


def evaluate_fidelity(real: Dataset, synth: Dataset, sigma="median",
                      scaler: ScalerParams | None = None) -> FidelityReport:
    """Fidelity of ``synth`` against ``real``.

    MMD runs on features scaled by ``scaler`` (fitted on ``real`` when not
    given); every other metric uses original units.
    """
    _check_schemas(real, synth)
    per = tuple(
        FeatureFidelity(name, wasserstein_1d(real.X[:, j], synth.X[:, j]),
                        ks_statistic(real.X[:, j], synth.X[:, j]))
        for j, name in enumerate(real.schema.feature_names)
    )
    scaler = scaler if scaler is not None else fit_scaler(real)
    A, B = scaler.transform(real.X), scaler.transform(synth.X)
    bw = median_bandwidth(A, B) if sigma == "median" else float(sigma)
    return FidelityReport(
        per_feature=per,
        mmd=mmd_gaussian(A, B, bw),
        mmd_sigma=bw,
        average_wasserstein=float(np.mean([f.wasserstein for f in per])),
        average_ks=float(np.mean([f.ks for f in per])),
        delta_stat=delta_stat(real.X, synth.X),
        n_real=real.n_samples,
        n_synthetic=synth.n_samples,
    )


def _densities(values, edges):
    if values.size == 0:
        return np.zeros(edges.size - 1)
    counts, _ = np.histogram(values, bins=edges)
    return counts / (values.size * np.diff(edges))


def export_histograms(real: Dataset, synth: Dataset, bins: int = 64) -> dict:
    """Binned densities per (feature, class) on shared edges.

    Edges span the union range of real and synthetic values for that feature
    and class; a zero-width range is widened to +/-0.5 around the value. A
    class with no rows on one side gets an all-zero series.
    """
    _check_schemas(real, synth)
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if real.class_names != synth.class_names:
        raise ValueError("real and synthetic class lists differ")
    out = []
    for j, name in enumerate(real.schema.feature_names):
        for c, cname in enumerate(real.class_names):
            r = real.X[real.y == c, j]
            s = synth.X[synth.y == c, j]
            both = np.concatenate([r, s])
            if both.size == 0:
                continue
            lo, hi = float(both.min()), float(both.max())
            if hi <= lo:
                lo, hi = lo - 0.5, hi + 0.5
            edges = np.linspace(lo, hi, bins + 1)
            out.append({
                "feature": name,
                "class": cname,
                "bin_edges": edges.tolist(),
                "real_density": _densities(r, edges).tolist(),
                "synthetic_density": _densities(s, edges).tolist(),
                "real_count": int(r.size),
                "synthetic_count": int(s.size),
            })
    return {"bins": bins, "series": out}
