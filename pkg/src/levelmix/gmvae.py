"""The mixture-prior VAE: label-assigning, prior-assigning, encoder and
decoder networks, the two-term loss, the training loop and per-component
generation.

Network layout (default widths, all configurable):
  label net    d -> 512 -> 512 -> 512 (relu) -> k logits, Gumbel-Softmax sample
  prior means  k -> 64 linear
  prior vars   k -> 64 softplus
  encoder      (d + k) -> 512 -> 512 -> 512 (relu) -> {64 linear, 64 softplus}
  decoder      64 -> 512 -> 512 -> 512 (relu) -> d sigmoid

Loss per item: recon_weight * BCE(decoder(z), x) + kl_weight * KL(q(z|x,y) || p(z|y))
with y the sampled label, z the reparameterized latent.

A third, batch-level term keeps the mixture from collapsing onto a single
component: label_balance_weight * KL(mean_batch softmax(logits) || uniform).
Without it the label net saturates toward one component within the first few
hundred Adam steps and never recovers (the straight-through gradient dies
once the softmax saturates). Set label_balance_weight to 0 for the bare
two-term objective. The prior nets and the label head start at zero weights
so no component is preferred before the data says so.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import neuralnet as nn
from .corpus import BalancedSampler, CHUNK_SIZE, decode
from .errors import (
    ComponentOutOfRange,
    DimensionMismatch,
    InvalidConfig,
    NonFiniteLoss,
)
from .neuralnet import DenseNet, AdamState, DiagGaussian


@dataclass
class GmvaeConfig:
    d: int
    k: int
    latent_dim: int = 64
    hidden_width: int = 512
    hidden_depth: int = 3
    batch_size: int = 64
    epochs: int = 10000
    learning_rate: float = 0.001
    kl_weight: float = 2.0
    recon_weight: float = 1.0
    label_balance_weight: float = 2.0
    tau_start: float = 1.0
    tau_min: float = 0.5
    tau_decay: Optional[float] = None  # None: reach tau_min halfway through training
    rng_seed: int = 0
    dtype: str = "float64"

    def validate(self):
        if self.k < 2:
            raise InvalidConfig(f"k must be >= 2, got {self.k}")
        if self.d < 1:
            raise InvalidConfig(f"d must be positive, got {self.d}")
        if min(self.latent_dim, self.hidden_width, self.hidden_depth, self.batch_size) < 1:
            raise InvalidConfig("latent_dim, hidden_width, hidden_depth, batch_size must be >= 1")
        if self.epochs < 0:
            raise InvalidConfig("epochs must be >= 0")
        if self.learning_rate <= 0 or self.tau_start <= 0 or self.tau_min <= 0:
            raise InvalidConfig("rates and temperatures must be > 0")
        if self.label_balance_weight < 0:
            raise InvalidConfig("label_balance_weight must be >= 0")
        if self.tau_min > self.tau_start:
            raise InvalidConfig("tau_min must not exceed tau_start")
        if self.tau_decay is not None and not 0 < self.tau_decay <= 1:
            raise InvalidConfig("tau_decay must be in (0, 1]")
        if self.dtype not in ("float64", "float32"):
            raise InvalidConfig(f"dtype must be float64 or float32, got {self.dtype}")
        return self


def temperature_schedule(config, epoch):
    """(tau, hard) for a given epoch.

    tau decays exponentially from tau_start and is floored at tau_min; the
    default decay reaches the floor halfway through training, after which
    sampling switches to hard straight-through one-hot labels.
    """
    half = max(1, config.epochs // 2)
    if config.tau_decay is not None:
        decay = config.tau_decay
    elif config.tau_min == config.tau_start:
        decay = 1.0
    else:
        decay = (config.tau_min / config.tau_start) ** (1.0 / half)
    tau = max(config.tau_min, config.tau_start * decay**epoch)
    hard = tau <= config.tau_min * (1.0 + 1e-12)
    return tau, hard


@dataclass
class TrainingHistory:
    recon_loss: list = field(default_factory=list)  # per-epoch means
    kl_loss: list = field(default_factory=list)
    label_balance_loss: list = field(default_factory=list)
    total_loss: list = field(default_factory=list)
    temperature: list = field(default_factory=list)

    def record(self, recon, kl, total, tau, label_balance=0.0):
        self.recon_loss.append(float(recon))
        self.kl_loss.append(float(kl))
        self.label_balance_loss.append(float(label_balance))
        self.total_loss.append(float(total))
        self.temperature.append(float(tau))

    def __len__(self):
        return len(self.total_loss)


@dataclass
class GmComponentParams:
    """Per-component latent Gaussians read out of the prior nets."""

    components: list  # k DiagGaussians

    @property
    def k(self):
        return len(self.components)


class GmvaeModel:
    def __init__(self, config, vocab=None):
        config.validate()
        if vocab is not None and config.d != CHUNK_SIZE * CHUNK_SIZE * vocab.size:
            raise InvalidConfig(
                f"d={config.d} does not match 256 * vocab size ({vocab.size})"
            )
        self.config = config
        self.vocab = vocab
        w, depth, ld = config.hidden_width, config.hidden_depth, config.latent_dim
        rng = np.random.default_rng(config.rng_seed)
        dt = config.dtype
        self.label_net = DenseNet(
            [config.d] + [w] * depth + [config.k], ["relu"] * depth + ["linear"], rng, dt
        )
        self.prior_mean_net = DenseNet([config.k, ld], ["linear"], rng, dt)
        self.prior_var_net = DenseNet([config.k, ld], ["softplus"], rng, dt)
        self.encoder_trunk = DenseNet(
            [config.d + config.k] + [w] * depth, ["relu"] * depth, rng, dt
        )
        self.enc_mean_head = DenseNet([w, ld], ["linear"], rng, dt)
        self.enc_var_head = DenseNet([w, ld], ["softplus"], rng, dt)
        self.decoder = DenseNet(
            [ld] + [w] * depth + [config.d], ["relu"] * depth + ["sigmoid"], rng, dt
        )
        # symmetric start: all components identical and all labels equally
        # likely, so early assignment is driven by the data, not by init noise
        self.label_net.layers[-1].weight[...] = 0.0
        self.prior_mean_net.layers[0].weight[...] = 0.0
        self.prior_var_net.layers[0].weight[...] = 0.0

    def networks(self):
        return {
            "label_net": self.label_net,
            "prior_mean_net": self.prior_mean_net,
            "prior_var_net": self.prior_var_net,
            "encoder_trunk": self.encoder_trunk,
            "enc_mean_head": self.enc_mean_head,
            "enc_var_head": self.enc_var_head,
            "decoder": self.decoder,
        }


def build_model(config, vocab=None):
    """Construct all networks; deterministic given config.rng_seed."""
    return GmvaeModel(config, vocab)


def assign_label(model, x, tau, rng, hard=False):
    """Label-net forward then Gumbel-Softmax; a length-k simplex vector
    (one-hot when hard) per input row."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[-1] != model.config.d:
        raise DimensionMismatch(f"expected d={model.config.d}, got {x.shape[-1]}")
    logits = model.label_net.forward(x)
    y, _, _ = nn.gumbel_softmax(logits, tau, rng, hard=hard)
    return y[0] if y.shape[0] == 1 else y


def _forward_pass(model, x, tau, hard, gumbel_noise, eps_noise, keep_caches):
    """Shared forward for loss evaluation and backprop."""
    logits, label_cache = model.label_net.forward_cached(x, keep_cache=keep_caches)
    y, soft_y, _ = nn.gumbel_softmax(logits, tau, rng=None, hard=hard, noise=gumbel_noise)
    enc_in = np.concatenate([x, y], axis=1)
    h, trunk_cache = model.encoder_trunk.forward_cached(enc_in, keep_cache=keep_caches)
    mu_q, mean_cache = model.enc_mean_head.forward_cached(h, keep_cache=keep_caches)
    var_q, var_cache = model.enc_var_head.forward_cached(h, keep_cache=keep_caches)
    mu_p, pmean_cache = model.prior_mean_net.forward_cached(y, keep_cache=keep_caches)
    var_p, pvar_cache = model.prior_var_net.forward_cached(y, keep_cache=keep_caches)
    z = mu_q + np.sqrt(var_q) * eps_noise
    x_hat, dec_cache = model.decoder.forward_cached(z, keep_cache=keep_caches)
    caches = {
        "label": label_cache,
        "trunk": trunk_cache,
        "enc_mean": mean_cache,
        "enc_var": var_cache,
        "prior_mean": pmean_cache,
        "prior_var": pvar_cache,
        "decoder": dec_cache,
    }
    tensors = {
        "logits": logits,
        "y": y,
        "soft_y": soft_y,
        "mu_q": mu_q,
        "var_q": var_q,
        "mu_p": mu_p,
        "var_p": var_p,
        "z": z,
        "x_hat": x_hat,
    }
    return tensors, caches


def _label_balance(logits, k):
    """KL(batch-mean label distribution || uniform) over the noiseless
    softmax; zero when labels spread evenly, log k at full collapse."""
    p = nn.softmax(logits, axis=-1)
    p_bar = p.mean(axis=0)
    return float(np.sum(p_bar * np.log(np.maximum(p_bar * k, 1e-300)))), p, p_bar


def gmvae_loss(model, x, tau, hard, gumbel_noise, eps_noise):
    """Mean per-item (recon, kl, label_balance) for a batch with frozen noise."""
    t, _ = _forward_pass(model, x, tau, hard, gumbel_noise, eps_noise, keep_caches=False)
    recon = nn.bce_loss(t["x_hat"], x)
    kl = nn.kl_diag(t["mu_q"], t["var_q"], t["mu_p"], t["var_p"])
    balance, _, _ = _label_balance(t["logits"], model.config.k)
    return float(np.mean(recon)), float(np.mean(kl)), balance


def gmvae_loss_and_grads(model, x, tau, hard, gumbel_noise, eps_noise):
    """Backprop the weighted mean loss to all five networks.

    Returns (recon, kl, balance, grads) where grads maps network name to the
    gradient list its AdamState expects. Gradients flow through the decoder,
    the reparameterized sample, both prior nets and (straight-through when
    hard) the Gumbel-Softmax back into the label net; the balance term adds a
    second, noiseless path into the label net.
    """
    cfg = model.config
    batch = x.shape[0]
    t, caches = _forward_pass(model, x, tau, hard, gumbel_noise, eps_noise, keep_caches=True)

    recon_vec, d_xhat = nn.bce_loss(t["x_hat"], x, with_grad=True)
    kl_vec, (d_mu_q, d_var_q, d_mu_p, d_var_p) = nn.kl_diag(
        t["mu_q"], t["var_q"], t["mu_p"], t["var_p"], with_grad=True
    )
    recon = float(np.mean(recon_vec))
    kl = float(np.mean(kl_vec))

    # scale per-item gradients for the weighted batch-mean objective
    rw = cfg.recon_weight / batch
    kw = cfg.kl_weight / batch

    dec_grads, d_z = model.decoder.backward(caches["decoder"], rw * d_xhat)
    d_mu_q_total = kw * d_mu_q + d_z
    d_var_q_total = kw * d_var_q + d_z * nn.reparam_grad_var(t["var_q"], eps_noise)

    mean_grads, d_h_mean = model.enc_mean_head.backward(caches["enc_mean"], d_mu_q_total)
    var_grads, d_h_var = model.enc_var_head.backward(caches["enc_var"], d_var_q_total)
    trunk_grads, d_enc_in = model.encoder_trunk.backward(caches["trunk"], d_h_mean + d_h_var)

    pmean_grads, d_y_mean = model.prior_mean_net.backward(caches["prior_mean"], kw * d_mu_p)
    pvar_grads, d_y_var = model.prior_var_net.backward(caches["prior_var"], kw * d_var_p)

    d_y = d_enc_in[:, cfg.d :] + d_y_mean + d_y_var
    d_logits = nn.gumbel_softmax_backward(t["soft_y"], tau, d_y)

    balance, p, p_bar = _label_balance(t["logits"], cfg.k)
    if cfg.label_balance_weight > 0:
        # d(balance)/d(p_bar) = log(k p_bar) + 1, pushed through each row's
        # softmax jacobian; every row contributes 1/batch to the mean
        g = np.log(np.maximum(p_bar * cfg.k, 1e-300)) + 1.0
        d_logits = d_logits + (cfg.label_balance_weight / batch) * (
            p * (g - (p @ g)[:, None])
        )
    label_grads, _ = model.label_net.backward(caches["label"], d_logits)

    grads = {
        "label_net": label_grads,
        "prior_mean_net": pmean_grads,
        "prior_var_net": pvar_grads,
        "encoder_trunk": trunk_grads,
        "enc_mean_head": mean_grads,
        "enc_var_head": var_grads,
        "decoder": dec_grads,
    }
    return recon, kl, balance, grads


def make_optimizers(model):
    """One Adam state per network, shared hyperparameters."""
    lr = model.config.learning_rate
    return {name: AdamState(net, learning_rate=lr) for name, net in model.networks().items()}


StepLosses = namedtuple("StepLosses", ["recon", "kl", "label_balance"])


def training_step(model, batch, tau, optimizers, rng, hard=False):
    """One gradient step on a batch of flat vectors.

    Returns StepLosses(recon, kl, label_balance); recon and kl are the two
    weighted objective terms, label_balance the anti-collapse regularizer.
    """
    cfg = model.config
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != cfg.d:
        raise DimensionMismatch(f"batch must be (n, {cfg.d}), got {x.shape}")
    if x.shape[0] > cfg.batch_size:
        raise DimensionMismatch(
            f"batch of {x.shape[0]} exceeds configured batch_size {cfg.batch_size}"
        )
    gumbel_noise = nn.sample_gumbel((x.shape[0], cfg.k), rng)
    eps_noise = rng.standard_normal((x.shape[0], cfg.latent_dim))
    recon, kl, balance, grads = gmvae_loss_and_grads(model, x, tau, hard, gumbel_noise, eps_noise)
    if not (math.isfinite(recon) and math.isfinite(kl) and math.isfinite(balance)):
        raise NonFiniteLoss(f"non-finite loss: recon={recon} kl={kl} balance={balance} tau={tau}")
    nets = model.networks()
    for name, opt in optimizers.items():
        opt.step(nets[name], grads[name])
    return StepLosses(recon, kl, balance)


def train(model, data, level_types=None, sampler="uniform", checkpoint_path=None, checkpoint_every=None, log_every=None):
    """Train for config.epochs epochs of ceil(n / batch_size) batches.

    data: (n, d) one-hot matrix. sampler: "uniform" shuffles each epoch;
    "balanced" draws indices weighted by 1 / level-type count (requires
    level_types). Returns the TrainingHistory; the model is updated in place
    and should be treated as immutable afterwards.
    """
    cfg = model.config
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if n == 0:
        raise DimensionMismatch("no training data")
    rng = np.random.default_rng(cfg.rng_seed + 1)  # distinct from init stream
    optimizers = make_optimizers(model)
    history = TrainingHistory()
    batches_per_epoch = max(1, math.ceil(n / cfg.batch_size))
    balanced = BalancedSampler(level_types, cfg.rng_seed + 2) if sampler == "balanced" else None

    for epoch in range(cfg.epochs):
        tau, hard = temperature_schedule(cfg, epoch)
        if balanced is not None:
            order = balanced.draw(n)
        else:
            order = rng.permutation(n)
        recon_sum = kl_sum = balance_sum = 0.0
        count = 0
        for b in range(batches_per_epoch):
            idx = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            if len(idx) == 0:
                continue
            losses = training_step(model, data[idx], tau, optimizers, rng, hard=hard)
            recon_sum += losses.recon * len(idx)
            kl_sum += losses.kl * len(idx)
            balance_sum += losses.label_balance * len(idx)
            count += len(idx)
        mean_recon = recon_sum / count
        mean_kl = kl_sum / count
        mean_balance = balance_sum / count
        total = (
            cfg.recon_weight * mean_recon
            + cfg.kl_weight * mean_kl
            + cfg.label_balance_weight * mean_balance
        )
        history.record(mean_recon, mean_kl, total, tau, label_balance=mean_balance)
        if log_every and (epoch + 1) % log_every == 0:
            print(
                f"epoch {epoch + 1}/{cfg.epochs} recon={mean_recon:.4f} "
                f"kl={mean_kl:.4f} total={total:.4f} tau={tau:.3f}"
            )
        if checkpoint_path and checkpoint_every and (epoch + 1) % checkpoint_every == 0:
            from .checkpoints import save_gmvae

            save_gmvae(checkpoint_path, model, history)
    if checkpoint_path:
        from .checkpoints import save_gmvae

        save_gmvae(checkpoint_path, model, history)
    return history


def component_params(model):
    """Forward each one-hot label through the prior nets."""
    eye = np.eye(model.config.k, dtype=np.float64)
    means = model.prior_mean_net.forward(eye)
    variances = model.prior_var_net.forward(eye)
    return GmComponentParams(
        components=[DiagGaussian(means[i], variances[i]) for i in range(model.config.k)]
    )


def generate(model, component, n, rng):
    """Sample n latents from one mixture component and decode to chunks."""
    cfg = model.config
    if not 0 <= component < cfg.k:
        raise ComponentOutOfRange(f"component {component} out of range [0, {cfg.k})")
    if n < 1:
        raise ComponentOutOfRange(f"n must be >= 1, got {n}")
    one_hot = np.zeros((1, cfg.k), dtype=np.float64)
    one_hot[0, component] = 1.0
    mu = model.prior_mean_net.forward(one_hot)[0]
    var = model.prior_var_net.forward(one_hot)[0]
    eps = rng.standard_normal((n, cfg.latent_dim))
    z = mu + np.sqrt(var) * eps
    x_hat = model.decoder.forward(z)
    return [
        decode(x_hat[i], model.vocab, level_id=f"gen-c{component}", offset=(0, i))
        for i in range(n)
    ]


def generate_flat(model, component, n, rng):
    """Like generate() but returns raw decoder outputs (n, d); usable without
    a vocab, e.g. for probing."""
    cfg = model.config
    if not 0 <= component < cfg.k:
        raise ComponentOutOfRange(f"component {component} out of range [0, {cfg.k})")
    one_hot = np.zeros((1, cfg.k), dtype=np.float64)
    one_hot[0, component] = 1.0
    mu = model.prior_mean_net.forward(one_hot)[0]
    var = model.prior_var_net.forward(one_hot)[0]
    z = mu + np.sqrt(var) * rng.standard_normal((n, cfg.latent_dim))
    return model.decoder.forward(z)


def hard_labels(model, data):
    """Deterministic component labels: argmax of the label-net logits
    (the zero-temperature, no-noise limit)."""
    data = np.asarray(data, dtype=np.float64)
    logits = model.label_net.forward(data)
    return np.argmax(logits, axis=1)


def encode_dataset(model, data, sampler_types=None, sampler_seed=None):
    """Per-row (latent mean vector, hard label index).

    With sampler_types, rows are re-drawn by a balanced sampler first and the
    chosen indices are returned as the third element.
    """
    data = np.asarray(data, dtype=np.float64)
    indices = np.arange(data.shape[0])
    if sampler_types is not None:
        sampler = BalancedSampler(sampler_types, 0 if sampler_seed is None else sampler_seed)
        indices = sampler.draw(data.shape[0])
        data = data[indices]
    labels = hard_labels(model, data)
    k = model.config.k
    one_hot = np.zeros((data.shape[0], k), dtype=np.float64)
    one_hot[np.arange(data.shape[0]), labels] = 1.0
    h = model.encoder_trunk.forward(np.concatenate([data, one_hot], axis=1))
    latents = model.enc_mean_head.forward(h)
    return latents, labels, indices
