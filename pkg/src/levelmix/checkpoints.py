"""JSON checkpoint formats for trained models.

Parameters are stored as nested number arrays; Python's float repr is the
shortest decimal that round-trips IEEE-754 doubles, so 64-bit weights survive
save/load bit-exactly (32-bit weights pass through float64 exactly as well).
Files are written with sorted keys and fixed separators so identical models
produce identical bytes.
"""

from __future__ import annotations

import json

import numpy as np

from .baseline import GmmModel, PcaProjection, VaeConfig, VaeGmmModel, VaeModel
from .corpus import TileVocab
from .errors import DataError
from .gmvae import GmvaeConfig, GmvaeModel, TrainingHistory
from .neuralnet import DenseNet, Layer

FORMAT_GMVAE = "levelmix-gmvae"
FORMAT_VAE_GMM = "levelmix-vae-gmm"
FORMAT_VERSION = 1


def _net_to_dict(net):
    return {
        "layers": [
            {
                "activation": layer.activation,
                "weight": layer.weight.astype(np.float64).tolist(),
                "bias": layer.bias.astype(np.float64).tolist(),
            }
            for layer in net.layers
        ]
    }


def _net_from_dict(data, dtype):
    net = DenseNet.__new__(DenseNet)
    net.dtype = np.dtype(dtype)
    net.layers = [
        Layer(
            weight=np.array(entry["weight"], dtype=net.dtype),
            bias=np.array(entry["bias"], dtype=net.dtype),
            activation=entry["activation"],
        )
        for entry in data["layers"]
    ]
    return net


def _vocab_to_dict(vocab):
    if vocab is None:
        return None
    return {
        "game": vocab.game,
        "chars": "".join(vocab.chars),
        "background": vocab.background_char,
    }


def _vocab_from_dict(data):
    if data is None:
        return None
    return TileVocab(
        game=data["game"], chars=tuple(data["chars"]), background_char=data["background"]
    )


def _history_to_dict(history):
    if history is None:
        return None
    return {
        "recon_loss": history.recon_loss,
        "kl_loss": history.kl_loss,
        "label_balance_loss": history.label_balance_loss,
        "total_loss": history.total_loss,
        "temperature": history.temperature,
    }


def _history_from_dict(data):
    if data is None:
        return None
    return TrainingHistory(
        recon_loss=list(data["recon_loss"]),
        kl_loss=list(data["kl_loss"]),
        label_balance_loss=list(data.get("label_balance_loss", [])),
        total_loss=list(data["total_loss"]),
        temperature=list(data["temperature"]),
    )


def _dump(path, payload):
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def save_gmvae(path, model, history=None, run_info=None):
    payload = {
        "format": FORMAT_GMVAE,
        "format_version": FORMAT_VERSION,
        "game": model.vocab.game if model.vocab else "",
        "config": vars(model.config),
        "vocab": _vocab_to_dict(model.vocab),
        "networks": {name: _net_to_dict(net) for name, net in model.networks().items()},
        "history": _history_to_dict(history),
        "run_info": run_info,
    }
    _dump(path, payload)


def load_gmvae(path):
    with open(path) as f:
        payload = json.load(f)
    if payload.get("format") != FORMAT_GMVAE:
        raise DataError(f"{path}: not a {FORMAT_GMVAE} checkpoint")
    config = GmvaeConfig(**payload["config"])
    vocab = _vocab_from_dict(payload["vocab"])
    model = GmvaeModel.__new__(GmvaeModel)
    model.config = config
    model.vocab = vocab
    nets = payload["networks"]
    model.label_net = _net_from_dict(nets["label_net"], config.dtype)
    model.prior_mean_net = _net_from_dict(nets["prior_mean_net"], config.dtype)
    model.prior_var_net = _net_from_dict(nets["prior_var_net"], config.dtype)
    model.encoder_trunk = _net_from_dict(nets["encoder_trunk"], config.dtype)
    model.enc_mean_head = _net_from_dict(nets["enc_mean_head"], config.dtype)
    model.enc_var_head = _net_from_dict(nets["enc_var_head"], config.dtype)
    model.decoder = _net_from_dict(nets["decoder"], config.dtype)
    return model, _history_from_dict(payload["history"])


def save_vae_gmm(path, model, history=None, run_info=None):
    payload = {
        "format": FORMAT_VAE_GMM,
        "format_version": FORMAT_VERSION,
        "game": model.vocab.game if model.vocab else "",
        "config": vars(model.vae.config),
        "vocab": _vocab_to_dict(model.vocab),
        "networks": {name: _net_to_dict(net) for name, net in model.vae.networks().items()},
        "pca": {
            "mean": model.pca.mean.tolist(),
            "axes": model.pca.axes.tolist(),
            "explained_variance": model.pca.explained_variance.tolist(),
            "total_variance": model.pca.total_variance,
            "m": model.pca.m,
        },
        "gmm": {
            "weights": model.gmm.weights.tolist(),
            "means": model.gmm.means.tolist(),
            "covariances": model.gmm.covariances.tolist(),
            "log_likelihood_trace": model.gmm.log_likelihood_trace,
        },
        "history": _history_to_dict(history),
        "run_info": run_info,
    }
    _dump(path, payload)


def load_vae_gmm(path):
    with open(path) as f:
        payload = json.load(f)
    if payload.get("format") != FORMAT_VAE_GMM:
        raise DataError(f"{path}: not a {FORMAT_VAE_GMM} checkpoint")
    config = VaeConfig(**payload["config"])
    vocab = _vocab_from_dict(payload["vocab"])
    vae = VaeModel.__new__(VaeModel)
    vae.config = config
    vae.vocab = vocab
    nets = payload["networks"]
    vae.encoder_trunk = _net_from_dict(nets["encoder_trunk"], config.dtype)
    vae.enc_mean_head = _net_from_dict(nets["enc_mean_head"], config.dtype)
    vae.enc_var_head = _net_from_dict(nets["enc_var_head"], config.dtype)
    vae.decoder = _net_from_dict(nets["decoder"], config.dtype)
    pca = PcaProjection(
        mean=np.array(payload["pca"]["mean"]),
        axes=np.array(payload["pca"]["axes"]),
        explained_variance=np.array(payload["pca"]["explained_variance"]),
        total_variance=payload["pca"]["total_variance"],
        m=payload["pca"]["m"],
    )
    gmm = GmmModel(
        weights=np.array(payload["gmm"]["weights"]),
        means=np.array(payload["gmm"]["means"]),
        covariances=np.array(payload["gmm"]["covariances"]),
        log_likelihood_trace=list(payload["gmm"]["log_likelihood_trace"]),
    )
    model = VaeGmmModel(vae=vae, pca=pca, gmm=gmm, vocab=vocab)
    return model, _history_from_dict(payload["history"])


def load_any(path):
    """(kind, model, history) for either checkpoint family."""
    with open(path) as f:
        fmt = json.load(f).get("format")
    if fmt == FORMAT_GMVAE:
        model, history = load_gmvae(path)
        return "gmvae", model, history
    if fmt == FORMAT_VAE_GMM:
        model, history = load_vae_gmm(path)
        return "vae-gmm", model, history
    raise DataError(f"{path}: unknown checkpoint format {fmt!r}")


def history_to_csv(history):
    lines = ["epoch,recon_loss,kl_loss,label_balance_loss,total_loss,temperature"]
    balance = history.label_balance_loss or [0.0] * len(history)
    for i in range(len(history)):
        lines.append(
            f"{i},{history.recon_loss[i]!r},{history.kl_loss[i]!r},{balance[i]!r},"
            f"{history.total_loss[i]!r},{history.temperature[i]!r}"
        )
    return "\n".join(lines) + "\n"
