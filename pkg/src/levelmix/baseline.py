"""The comparison pipeline: a standard unimodal-prior VAE, PCA keeping 95%
variance, and a full-covariance Gaussian mixture fit by EM with k-means++
restarts. Clustering a VAE latent space post-hoc is the naive alternative to
learning the mixture during training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import neuralnet as nn
from .corpus import BalancedSampler, decode
from .errors import (
    ComponentOutOfRange,
    DegenerateData,
    DimensionMismatch,
    InvalidConfig,
    NonFiniteLoss,
    NumericError,
    SingularCovariance,
)
from .neuralnet import AdamState, DenseNet


@dataclass
class VaeConfig:
    d: int
    latent_dim: int = 64
    hidden_width: int = 512
    hidden_depth: int = 3
    batch_size: int = 64
    epochs: int = 10000
    learning_rate: float = 0.001
    kl_weight: float = 2.0
    recon_weight: float = 1.0
    rng_seed: int = 0
    dtype: str = "float64"

    def validate(self):
        if self.d < 1:
            raise InvalidConfig(f"d must be positive, got {self.d}")
        if min(self.latent_dim, self.hidden_width, self.hidden_depth, self.batch_size) < 1:
            raise InvalidConfig("latent_dim, hidden_width, hidden_depth, batch_size must be >= 1")
        if self.epochs < 0 or self.learning_rate <= 0:
            raise InvalidConfig("epochs must be >= 0 and learning_rate > 0")
        if self.dtype not in ("float64", "float32"):
            raise InvalidConfig(f"dtype must be float64 or float32, got {self.dtype}")
        return self


class VaeModel:
    """Encoder/decoder identical to the mixture model minus label machinery,
    so comparisons isolate the prior."""

    def __init__(self, config, vocab=None):
        config.validate()
        self.config = config
        self.vocab = vocab
        w, depth, ld = config.hidden_width, config.hidden_depth, config.latent_dim
        rng = np.random.default_rng(config.rng_seed)
        dt = config.dtype
        self.encoder_trunk = DenseNet([config.d] + [w] * depth, ["relu"] * depth, rng, dt)
        self.enc_mean_head = DenseNet([w, ld], ["linear"], rng, dt)
        self.enc_var_head = DenseNet([w, ld], ["softplus"], rng, dt)
        self.decoder = DenseNet(
            [ld] + [w] * depth + [config.d], ["relu"] * depth + ["sigmoid"], rng, dt
        )

    def networks(self):
        return {
            "encoder_trunk": self.encoder_trunk,
            "enc_mean_head": self.enc_mean_head,
            "enc_var_head": self.enc_var_head,
            "decoder": self.decoder,
        }


def vae_loss(model, x, eps_noise):
    """Mean per-item (recon, kl) against the standard-normal prior."""
    h = model.encoder_trunk.forward(x)
    mu = model.enc_mean_head.forward(h)
    var = model.enc_var_head.forward(h)
    z = mu + np.sqrt(var) * eps_noise
    x_hat = model.decoder.forward(z)
    recon = nn.bce_loss(x_hat, x)
    kl = nn.kl_diag(mu, var, np.zeros_like(mu), np.ones_like(var))
    return float(np.mean(recon)), float(np.mean(kl))


def vae_loss_and_grads(model, x, eps_noise):
    cfg = model.config
    batch = x.shape[0]
    h, trunk_cache = model.encoder_trunk.forward_cached(x)
    mu, mean_cache = model.enc_mean_head.forward_cached(h)
    var, var_cache = model.enc_var_head.forward_cached(h)
    z = mu + np.sqrt(var) * eps_noise
    x_hat, dec_cache = model.decoder.forward_cached(z)

    recon_vec, d_xhat = nn.bce_loss(x_hat, x, with_grad=True)
    kl_vec, (d_mu, d_var, _, _) = nn.kl_diag(
        mu, var, np.zeros_like(mu), np.ones_like(var), with_grad=True
    )
    rw = cfg.recon_weight / batch
    kw = cfg.kl_weight / batch

    dec_grads, d_z = model.decoder.backward(dec_cache, rw * d_xhat)
    d_mu_total = kw * d_mu + d_z
    d_var_total = kw * d_var + d_z * nn.reparam_grad_var(var, eps_noise)
    mean_grads, d_h_mean = model.enc_mean_head.backward(mean_cache, d_mu_total)
    var_grads, d_h_var = model.enc_var_head.backward(var_cache, d_var_total)
    trunk_grads, _ = model.encoder_trunk.backward(trunk_cache, d_h_mean + d_h_var)

    grads = {
        "encoder_trunk": trunk_grads,
        "enc_mean_head": mean_grads,
        "enc_var_head": var_grads,
        "decoder": dec_grads,
    }
    return float(np.mean(recon_vec)), float(np.mean(kl_vec)), grads


def train_vae(data, config, level_types=None, sampler="uniform", log_every=None):
    """Same loop shape as the mixture model's train(); returns (model, history)."""
    from .gmvae import TrainingHistory

    config.validate()
    model = VaeModel(config)
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if n == 0:
        raise DimensionMismatch("no training data")
    rng = np.random.default_rng(config.rng_seed + 1)
    optimizers = {
        name: AdamState(net, learning_rate=config.learning_rate)
        for name, net in model.networks().items()
    }
    history = TrainingHistory()
    batches_per_epoch = max(1, math.ceil(n / config.batch_size))
    balanced = BalancedSampler(level_types, config.rng_seed + 2) if sampler == "balanced" else None

    for epoch in range(config.epochs):
        order = balanced.draw(n) if balanced is not None else rng.permutation(n)
        recon_sum = kl_sum = 0.0
        count = 0
        for b in range(batches_per_epoch):
            idx = order[b * config.batch_size : (b + 1) * config.batch_size]
            if len(idx) == 0:
                continue
            x = data[idx]
            eps = rng.standard_normal((x.shape[0], config.latent_dim))
            recon, kl, grads = vae_loss_and_grads(model, x, eps)
            if not (math.isfinite(recon) and math.isfinite(kl)):
                raise NonFiniteLoss(f"non-finite loss at epoch {epoch}: recon={recon} kl={kl}")
            nets = model.networks()
            for name, opt in optimizers.items():
                opt.step(nets[name], grads[name])
            recon_sum += recon * len(idx)
            kl_sum += kl * len(idx)
            count += len(idx)
        mean_recon = recon_sum / count
        mean_kl = kl_sum / count
        total = config.recon_weight * mean_recon + config.kl_weight * mean_kl
        history.record(mean_recon, mean_kl, total, 0.0)
        if log_every and (epoch + 1) % log_every == 0:
            print(f"epoch {epoch + 1}/{config.epochs} recon={mean_recon:.4f} kl={mean_kl:.4f}")
    return model, history


def vae_encode(model, data):
    """Deterministic latent means (no sampling)."""
    data = np.asarray(data, dtype=np.float64)
    h = model.encoder_trunk.forward(data)
    return model.enc_mean_head.forward(h)


# ---------------------------------------------------------------------------
# PCA


@dataclass
class PcaProjection:
    mean: np.ndarray  # (dim,)
    axes: np.ndarray  # (m, dim), orthonormal rows
    explained_variance: np.ndarray  # per retained axis, non-increasing
    total_variance: float
    m: int


def pca_fit(data, variance_target=0.95):
    """Center, factorize, keep the smallest axis count reaching the variance
    target. SVD of the centered data is used; axis signs are fixed so the
    largest-magnitude loading is positive, keeping fits deterministic."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2:
        raise DegenerateData("need at least 2 vectors")
    mean = data.mean(axis=0)
    centered = data - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    variances = s * s / (data.shape[0] - 1)
    total = float(variances.sum())
    if total <= 0.0:
        raise DegenerateData("data has zero variance")
    cumulative = np.cumsum(variances) / total
    m = int(np.searchsorted(cumulative, variance_target - 1e-12) + 1)
    m = min(m, len(variances))
    axes = vt[:m].copy()
    for i in range(m):
        j = int(np.argmax(np.abs(axes[i])))
        if axes[i, j] < 0:
            axes[i] = -axes[i]
    return PcaProjection(
        mean=mean,
        axes=axes,
        explained_variance=variances[:m].copy(),
        total_variance=total,
        m=m,
    )


def pca_project(projection, data):
    data = np.asarray(data, dtype=np.float64)
    if data.shape[-1] != projection.mean.shape[0]:
        raise DimensionMismatch(
            f"expected dim {projection.mean.shape[0]}, got {data.shape[-1]}"
        )
    return (data - projection.mean) @ projection.axes.T


def pca_inverse(projection, projected):
    """Back-project m-dimensional points into the original space."""
    projected = np.asarray(projected, dtype=np.float64)
    return projected @ projection.axes + projection.mean


# ---------------------------------------------------------------------------
# Gaussian mixture via EM


@dataclass
class GmmModel:
    weights: np.ndarray  # (k,), sums to 1
    means: np.ndarray  # (k, m)
    covariances: np.ndarray  # (k, m, m), SPD after ridge
    log_likelihood_trace: list = field(default_factory=list)  # mean LL per iteration

    @property
    def k(self):
        return self.weights.shape[0]


def _log_gaussian(points, mean, cov):
    """Log density of N(mean, cov) at each point, via Cholesky."""
    m = points.shape[1]
    chol = np.linalg.cholesky(cov)
    diff = points - mean
    y = np.linalg.solve(chol, diff.T)
    maha = np.sum(y * y, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (m * np.log(2.0 * np.pi) + logdet + maha)


def _kmeans_pp_means(points, k, rng):
    """k-means++ seeding: first mean uniform, then proportional to squared
    distance from the nearest chosen mean."""
    n = points.shape[0]
    means = np.empty((k, points.shape[1]), dtype=np.float64)
    means[0] = points[rng.integers(n)]
    d2 = np.sum((points - means[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            means[i] = points[rng.integers(n)]
            continue
        means[i] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((points - means[i]) ** 2, axis=1))
    return means


def _em_run(points, k, rng, max_iters, tol, ridge):
    n, m = points.shape
    means = _kmeans_pp_means(points, k, rng)
    if n >= 2:
        shared = np.cov(points.T).reshape(m, m) + ridge * np.eye(m)
    else:
        shared = ridge * np.eye(m)
    covariances = np.repeat(shared[None], k, axis=0)
    weights = np.full(k, 1.0 / k)
    trace = []
    prev = -np.inf
    for _ in range(max_iters):
        # E step: log responsibilities with log-sum-exp
        log_prob = np.empty((n, k))
        for j in range(k):
            try:
                log_prob[:, j] = np.log(weights[j]) + _log_gaussian(points, means[j], covariances[j])
            except np.linalg.LinAlgError:
                raise SingularCovariance(
                    f"component {j} covariance not positive definite despite ridge {ridge}"
                ) from None
        log_max = log_prob.max(axis=1, keepdims=True)
        log_norm = log_max + np.log(np.exp(log_prob - log_max).sum(axis=1, keepdims=True))
        resp = np.exp(log_prob - log_norm)
        ll = float(log_norm.mean())
        trace.append(ll)
        if ll < prev - 1e-9 * max(1.0, abs(prev)):
            raise NumericError(f"EM log-likelihood decreased: {prev} -> {ll}")
        improved = ll - prev
        prev = ll
        # M step
        nk = resp.sum(axis=0) + 1e-12
        weights = resp.sum(axis=0) / resp.sum()  # exact simplex
        means = (resp.T @ points) / nk[:, None]
        for j in range(k):
            diff = points - means[j]
            covariances[j] = (resp[:, j, None] * diff).T @ diff / nk[j] + ridge * np.eye(m)
        if improved < tol:
            break
    return GmmModel(weights=weights, means=means, covariances=covariances, log_likelihood_trace=trace)


def gmm_fit(points, k, rng_seed=0, max_iters=200, tol=1e-4, ridge=1e-6, restarts=10):
    """EM with k-means++ restarts; the best final mean log-likelihood wins,
    ties broken by lowest restart index."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] < k:
        raise DegenerateData(f"need at least k={k} points, got {points.shape[0]}")
    best = None
    best_ll = -np.inf
    failures = []
    for r in range(restarts):
        rng = np.random.default_rng(rng_seed + r)
        try:
            model = _em_run(points, k, rng, max_iters, tol, ridge)
        except SingularCovariance as exc:
            failures.append(str(exc))
            continue
        ll = model.log_likelihood_trace[-1]
        if ll > best_ll:
            best, best_ll = model, ll
    if best is None:
        raise SingularCovariance(
            f"all {restarts} EM restarts failed: {failures[:3]}"
        )
    return best


def gmm_log_responsibilities(model, points):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[1] != model.means.shape[1]:
        raise DimensionMismatch(
            f"points have dim {points.shape[1]}, model expects {model.means.shape[1]}"
        )
    log_prob = np.empty((points.shape[0], model.k))
    for j in range(model.k):
        log_prob[:, j] = np.log(model.weights[j]) + _log_gaussian(
            points, model.means[j], model.covariances[j]
        )
    log_max = log_prob.max(axis=1, keepdims=True)
    log_norm = log_max + np.log(np.exp(log_prob - log_max).sum(axis=1, keepdims=True))
    return log_prob - log_norm


def gmm_responsibilities(model, points):
    return np.exp(gmm_log_responsibilities(model, points))


def gmm_predict(model, points):
    """Hard component index per point (argmax posterior responsibility)."""
    return np.argmax(gmm_log_responsibilities(model, points), axis=1)


def gmm_sample(model, component, n, rng):
    if not 0 <= component < model.k:
        raise ComponentOutOfRange(f"component {component} out of range [0, {model.k})")
    chol = np.linalg.cholesky(model.covariances[component])
    eps = rng.standard_normal((n, model.means.shape[1]))
    return model.means[component] + eps @ chol.T


# ---------------------------------------------------------------------------
# The combined pipeline


@dataclass
class VaeGmmModel:
    """VAE + PCA + GMM stages glued together for clustering and generation."""

    vae: VaeModel
    pca: PcaProjection
    gmm: GmmModel
    vocab: Optional[object] = None

    @property
    def k(self):
        return self.gmm.k

    def predict(self, data):
        """Hard cluster per flat input vector."""
        return gmm_predict(self.gmm, pca_project(self.pca, vae_encode(self.vae, data)))

    def generate_flat(self, component, n, rng):
        """Sample a GMM component, back-project through PCA, decode."""
        projected = gmm_sample(self.gmm, component, n, rng)
        latents = pca_inverse(self.pca, projected)
        return self.vae.decoder.forward(latents)

    def generate(self, component, n, rng):
        x_hat = self.generate_flat(component, n, rng)
        return [
            decode(x_hat[i], self.vocab, level_id=f"gen-c{component}", offset=(0, i))
            for i in range(n)
        ]


def fit_vae_gmm(data, vae_config, k, gmm_seed=0, vocab=None, level_types=None, sampler="uniform", log_every=None):
    """Train the VAE, project its latent means by PCA (95% variance), fit a
    k-component mixture on the projection."""
    vae, history = train_vae(
        data, vae_config, level_types=level_types, sampler=sampler, log_every=log_every
    )
    vae.vocab = vocab
    latents = vae_encode(vae, data)
    projection = pca_fit(latents, variance_target=0.95)
    gmm = gmm_fit(pca_project(projection, latents), k, rng_seed=gmm_seed)
    return VaeGmmModel(vae=vae, pca=projection, gmm=gmm, vocab=vocab), history
