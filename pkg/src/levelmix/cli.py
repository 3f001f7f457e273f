"""Command-line pipeline: ingest, train, train-baseline, generate, encode,
eval-cluster, eval-disentangle, eval-playability, densities, chart, sweep.

Every artifact records the resolved command, flags, seed and package version
(JSON artifacts inline under "run_info", CSV/SVG artifacts via a sidecar
<output>.run.json), so a run can be reproduced exactly. Exit codes: 0
success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import functools
import json
import os
import sys

import numpy as np

from . import __version__
from . import baseline as bl
from . import charts
from . import checkpoints as ckpt
from . import corpus as cp
from . import evaluation as ev
from . import gmvae as gm
from . import playability as pl
from .errors import (
    ComponentOutOfRange,
    DataError,
    LevelMixError,
    NumericError,
    UsageError,
)

DEFAULT_SEED = 42


def _run_info(command, args):
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    return {
        "command": command,
        "flags": flags,
        "seed": flags.get("seed"),
        "version": __version__,
    }


def _write_sidecar(out_path, info):
    with open(out_path + ".run.json", "w") as f:
        json.dump(info, f, sort_keys=True, indent=2)
        f.write("\n")


def _load_corpus(args, heuristic_types=False):
    manifest = cp.load_manifest(args.manifest)
    levels, vocab, chunks = cp.load_corpus(
        manifest, heuristic_types=heuristic_types or getattr(args, "heuristic_types", False)
    )
    return manifest, levels, vocab, chunks


def _gmvae_config(args, d):
    return gm.GmvaeConfig(
        d=d,
        k=args.k,
        latent_dim=args.latent_dim,
        hidden_width=args.hidden_width,
        hidden_depth=args.hidden_depth,
        batch_size=args.batch_size,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        kl_weight=args.kl_weight,
        recon_weight=args.recon_weight,
        label_balance_weight=args.label_balance_weight,
        tau_start=args.tau_start,
        tau_min=args.tau_min,
        tau_decay=args.tau_decay,
        rng_seed=args.seed,
        dtype=args.dtype,
    ).validate()


def _vae_config(args, d):
    return bl.VaeConfig(
        d=d,
        latent_dim=args.latent_dim,
        hidden_width=args.hidden_width,
        hidden_depth=args.hidden_depth,
        batch_size=args.batch_size,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        kl_weight=args.kl_weight,
        recon_weight=args.recon_weight,
        rng_seed=args.seed,
        dtype=args.dtype,
    ).validate()


def _generator(kind, model):
    if kind == "gmvae":
        return functools.partial(gm.generate, model)
    return model.generate


def _model_k(kind, model):
    return model.config.k if kind == "gmvae" else model.k


def cmd_ingest(args):
    manifest, levels, vocab, chunks = _load_corpus(args)
    d = cp.CHUNK_SIZE * cp.CHUNK_SIZE * vocab.size
    summary = {
        "game": manifest.game,
        "levels": len(levels),
        "vocab_size": vocab.size,
        "vocab": "".join(vocab.chars),
        "d": d,
        "chunks": len(chunks),
    }
    print(json.dumps(summary, indent=2))
    if args.out:
        cp.write_chunk_dump(args.out, chunks, vocab)
        _write_sidecar(args.out, _run_info("ingest", args))
    return 0


def cmd_train(args):
    manifest, levels, vocab, chunks = _load_corpus(args, heuristic_types=args.sampler == "balanced")
    data = cp.encode_chunks(chunks, vocab)
    config = _gmvae_config(args, data.shape[1])
    model = gm.build_model(config, vocab)
    level_types = [c.level_type for c in chunks]
    history = gm.train(
        model,
        data,
        level_types=level_types if args.sampler == "balanced" else None,
        sampler=args.sampler,
        checkpoint_path=args.out if args.checkpoint_every else None,
        checkpoint_every=args.checkpoint_every,
        log_every=args.log_every,
    )
    ckpt.save_gmvae(args.out, model, history, run_info=_run_info("train", args))
    if args.history_csv:
        with open(args.history_csv, "w") as f:
            f.write(ckpt.history_to_csv(history))
        _write_sidecar(args.history_csv, _run_info("train", args))
    print(f"saved {args.out} ({len(history)} epochs)")
    return 0


def cmd_train_baseline(args):
    manifest, levels, vocab, chunks = _load_corpus(args, heuristic_types=args.sampler == "balanced")
    data = cp.encode_chunks(chunks, vocab)
    config = _vae_config(args, data.shape[1])
    level_types = [c.level_type for c in chunks]
    model, history = bl.fit_vae_gmm(
        data,
        config,
        args.k,
        gmm_seed=args.seed,
        vocab=vocab,
        level_types=level_types if args.sampler == "balanced" else None,
        sampler=args.sampler,
        log_every=args.log_every,
    )
    ckpt.save_vae_gmm(args.out, model, history, run_info=_run_info("train-baseline", args))
    if args.history_csv:
        with open(args.history_csv, "w") as f:
            f.write(ckpt.history_to_csv(history))
        _write_sidecar(args.history_csv, _run_info("train-baseline", args))
    print(f"saved {args.out} (pca kept {model.pca.m} axes)")
    return 0


def cmd_generate(args):
    kind, model, _ = ckpt.load_any(args.model)
    k = _model_k(kind, model)
    if not 0 <= args.component < k:
        raise ComponentOutOfRange(f"component {args.component} out of range [0, {k})")
    rng = np.random.default_rng(args.seed)
    chunks = _generator(kind, model)(args.component, args.n, rng)
    vocab = model.vocab
    rendered = ["\n".join(render_chunk_ascii(c, vocab)) for c in chunks]
    text = ("\n\n").join(rendered) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        _write_sidecar(args.out, _run_info("generate", args))
    else:
        print(text, end="")
    return 0


def render_chunk_ascii(chunk, vocab):
    """16 lines of 16 characters; parse_level() reproduces the chunk."""
    return cp.chunk_to_lines(chunk, vocab)


def cmd_encode(args):
    kind, model, _ = ckpt.load_any(args.model)
    manifest, levels, vocab, chunks = _load_corpus(args, heuristic_types=True)
    data = cp.encode_chunks(chunks, model.vocab or vocab)
    if kind == "gmvae":
        types = [c.level_type for c in chunks] if args.balanced else None
        latents, labels, indices = gm.encode_dataset(
            model, data, sampler_types=types, sampler_seed=args.seed
        )
    else:
        latents = bl.vae_encode(model.vae, data)
        labels = model.predict(data)
        indices = np.arange(len(chunks))
    picked = [chunks[i] for i in indices]
    ids = [f"{c.level_id}:{c.offset[0]}:{c.offset[1]}" for c in picked]
    with open(args.out, "w", newline="") as f:
        ev.export_latents(f, ids, [c.level_type for c in picked], labels, latents)
    _write_sidecar(args.out, _run_info("encode", args))
    print(f"wrote {len(ids)} rows to {args.out}")
    return 0


def cmd_eval_cluster(args):
    kind, model, _ = ckpt.load_any(args.model)
    manifest, levels, vocab, chunks = _load_corpus(args, heuristic_types=True)
    data = cp.encode_chunks(chunks, model.vocab or vocab)
    if kind == "gmvae":
        labels = gm.hard_labels(model, data)
        k = model.config.k
    else:
        labels = model.predict(data)
        k = model.k
    report = ev.clustering_accuracy(labels, [c.level_type for c in chunks], k)
    payload = {"run_info": _run_info("eval-cluster", args), "report": report.to_dict()}
    with open(args.out, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"balanced accuracy {report.balanced_accuracy:.4f} -> {args.out}")
    return 0


def cmd_eval_disentangle(args):
    kind, model, _ = ckpt.load_any(args.model)
    rng = np.random.default_rng(args.seed)
    report = ev.disentanglement(
        _generator(kind, model),
        _model_k(kind, model),
        model.vocab,
        rng,
        n_per_component=args.n_per_component,
        n_train=args.n_train,
    )
    payload = {"run_info": _run_info("eval-disentangle", args), "report": report.to_dict()}
    with open(args.out, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    print(
        f"p70={report.p70:.3f} p80={report.p80:.3f} p90={report.p90:.3f} -> {args.out}"
    )
    return 0


def cmd_eval_playability(args):
    kind, model, _ = ckpt.load_any(args.model)
    manifest = cp.load_manifest(args.manifest)
    rules = pl.rules_from_manifest(manifest)
    vocab = model.vocab
    missing = [c for c in vocab.chars if c not in rules.solidity]
    if missing:
        raise DataError(f"solidity map misses vocab tiles {missing!r}")
    rng = np.random.default_rng(args.seed)
    result = pl.playability_suite(
        _generator(kind, model),
        _model_k(kind, model),
        rules,
        vocab,
        rng,
        total_budget=args.budget,
    )
    payload = {"run_info": _run_info("eval-playability", args), "report": result.to_dict()}
    with open(args.out, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"playable {result.playable_count}/{result.total} = {result.fraction:.4f} -> {args.out}")
    return 0


def _density_groups(args, kind, model):
    rng = np.random.default_rng(args.seed)
    k = _model_k(kind, model)
    if args.source == "generated":
        gen = _generator(kind, model)
        return [gen(i, args.n_per_component, rng) for i in range(k)]
    manifest, levels, vocab, chunks = _load_corpus(args, heuristic_types=True)
    data = cp.encode_chunks(chunks, model.vocab or vocab)
    labels = gm.hard_labels(model, data) if kind == "gmvae" else model.predict(data)
    groups = [[] for _ in range(k)]
    for chunk, lab in zip(chunks, labels):
        groups[int(lab)].append(chunk)
    return groups


def cmd_densities(args):
    kind, model, _ = ckpt.load_any(args.model)
    if args.source == "corpus" and not args.manifest:
        raise UsageError("--source corpus needs --manifest")
    groups = _density_groups(args, kind, model)
    matrix = ev.tile_densities(groups, model.vocab)
    with open(args.out, "w") as f:
        f.write(matrix.to_csv())
    _write_sidecar(args.out, _run_info("densities", args))
    print(f"wrote {matrix.k} x {len(matrix.tile_chars)} density matrix to {args.out}")
    return 0


def _matrix_from_csv(path):
    with open(path) as f:
        reader = csv.reader(f)
        header = next(reader)
        tile_chars = header[1:]
        values = [[float(v) for v in row[1:]] for row in reader]
    return ev.TileDensityMatrix(values=np.array(values), tile_chars=tile_chars, k=len(values))


def cmd_chart(args):
    matrix = _matrix_from_csv(args.densities)
    os.makedirs(args.out_dir, exist_ok=True)
    documents = charts.emit_radial_charts(matrix)
    paths = []
    for i, doc in enumerate(documents):
        path = os.path.join(args.out_dir, f"component_{i:02d}.svg")
        with open(path, "w") as f:
            f.write(doc)
        paths.append(path)
    _write_sidecar(os.path.join(args.out_dir, "charts"), _run_info("chart", args))
    print(f"wrote {len(paths)} charts to {args.out_dir}")
    return 0


def cmd_sweep(args):
    k_list = [int(v) for v in args.k_list.split(",") if v.strip()]
    if not k_list:
        raise UsageError("empty k list")
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    if not families or any(f not in ("gmvae", "vae-gmm") for f in families):
        raise UsageError("families must be a comma list drawn from gmvae,vae-gmm")
    manifest, levels, vocab, chunks = _load_corpus(args, heuristic_types=args.sampler == "balanced")
    data = cp.encode_chunks(chunks, vocab)
    level_types = [c.level_type for c in chunks]
    types_arg = level_types if args.sampler == "balanced" else None
    rows = []
    for family in families:
        for k in k_list:
            rng = np.random.default_rng(args.seed + k)
            if family == "gmvae":
                base = argparse.Namespace(**vars(args))
                base.k = k
                config = _gmvae_config(base, data.shape[1])
                model = gm.build_model(config, vocab)
                gm.train(model, data, level_types=types_arg, sampler=args.sampler)
                gen, kk = _generator("gmvae", model), k
            else:
                base = argparse.Namespace(**vars(args))
                config = _vae_config(base, data.shape[1])
                model, _ = bl.fit_vae_gmm(
                    data, config, k, gmm_seed=args.seed, vocab=vocab,
                    level_types=types_arg, sampler=args.sampler,
                )
                gen, kk = _generator("vae-gmm", model), k
            report = ev.disentanglement(
                gen, kk, vocab, rng,
                n_per_component=args.n_per_component, n_train=args.n_train,
            )
            rows.append((family, k, report.p70, report.p80, report.p90))
            print(f"{family} k={k}: p70={report.p70:.3f} p80={report.p80:.3f} p90={report.p90:.3f}")
    with open(args.out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["family", "k", "p70", "p80", "p90"])
        for row in rows:
            writer.writerow(row)
    _write_sidecar(args.out, _run_info("sweep", args))
    return 0


def _add_model_flags(p, with_k=True):
    if with_k:
        p.add_argument("--k", type=int, required=True, help="mixture component count")
    p.add_argument("--epochs", type=int, default=10000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--latent-dim", type=int, default=64)
    p.add_argument("--hidden-width", type=int, default=512)
    p.add_argument("--hidden-depth", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--kl-weight", type=float, default=2.0)
    p.add_argument("--recon-weight", type=float, default=1.0)
    p.add_argument("--label-balance-weight", type=float, default=2.0)
    p.add_argument("--tau-start", type=float, default=1.0)
    p.add_argument("--tau-min", type=float, default=0.5)
    p.add_argument("--tau-decay", type=float, default=None)
    p.add_argument("--dtype", choices=("float64", "float32"), default="float64")
    p.add_argument("--sampler", choices=("uniform", "balanced"), default="uniform")
    p.add_argument("--log-every", type=int, default=None)
    p.add_argument("--history-csv", default=None)
    p.add_argument("--checkpoint-every", type=int, default=None, help="also save every N epochs")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="levelmix",
        description="mixture-prior VAEs over tile-grid level chunks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a corpus and report chunk counts")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None, help="optional chunk dump (JSON lines)")
    p.add_argument("--heuristic-types", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train a mixture-prior model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("train-baseline", help="train the VAE + PCA + GMM pipeline")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("generate", help="sample chunks from one component")
    p.add_argument("--model", required=True)
    p.add_argument("--component", type=int, required=True)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("encode", help="export latent means and hard labels to CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--balanced", action="store_true", help="balanced re-draw before encoding")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("eval-cluster", help="balanced clustering accuracy against level types")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_cluster)

    p = sub.add_parser("eval-disentangle", help="probe-based disentanglement proportions")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--n-per-component", type=int, default=500)
    p.add_argument("--n-train", type=int, default=300)
    p.set_defaults(func=cmd_eval_disentangle)

    p = sub.add_parser("eval-playability", help="A* playability of generated chunks")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True, help="supplies solidity map and axis")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--budget", type=int, default=10000)
    p.set_defaults(func=cmd_eval_playability)

    p = sub.add_parser("densities", help="per-component normalized tile densities")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--source", choices=("generated", "corpus"), default="generated")
    p.add_argument("--manifest", default=None)
    p.add_argument("--n-per-component", type=int, default=500)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_densities)

    p = sub.add_parser("chart", help="radial bar chart SVGs from a density CSV")
    p.add_argument("--densities", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_chart)

    p = sub.add_parser("sweep", help="disentanglement proportions over a k grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k-list", required=True, help="comma-separated component counts")
    p.add_argument("--families", default="gmvae,vae-gmm")
    p.add_argument("--n-per-component", type=int, default=500)
    p.add_argument("--n-train", type=int, default=300)
    _add_model_flags(p, with_k=False)
    p.set_defaults(func=cmd_sweep)

    return parser


def run(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        _report_error("usage", exc)
        return 1
    except NumericError as exc:
        _report_error("numeric", exc)
        return 3
    except (DataError, LevelMixError) as exc:
        _report_error("data", exc)
        return 2
    except OSError as exc:
        _report_error("data", exc)
        return 2


def _report_error(kind, exc):
    print(
        json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}),
        file=sys.stderr,
    )


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
