"""Command-line entry point.

Subcommands fall in two layers: single-step tools (``gen-data``,
``train-gan``, ``train-classifier``, ``annotate``) that read and write one
file each, and report pipelines (``mode-report``, ``boundary-report``,
``spectrum``, ``score``, ``demo``, ``run``) that leave a report directory
with CSV tables, SVG plots and a manifest.

Settings resolve in fixed precedence: built-in defaults, then ``--config``
file keys, then explicit flags. Every random draw derives from ``--seed``
(or the ``seed`` config key); nothing reads the clock or the environment.

Exit codes: 0 success, 2 config or validation error, 3 numeric failure,
4 I/O or checkpoint-format failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import __version__
from ..distributions import SOURCE_TAGS, LabeledDataset
from ..errors import (
    CheckpointFormatError,
    ConfigError,
    ContractViolation,
    NumericError,
    ValidationError,
)
from ..gan import GanRun, generate, train_vanilla_gan
from ..neural import MlpArch, predict, train_classifier
from ..numkit import Rng
from .config import ExperimentConfig, build_experiment_config, parse_config
from .dataio import load_checkpoint, load_dataset, save_checkpoint, save_dataset
from .experiments import _true_data, fig1a_config, fig1b_config, run_experiment

__all__ = ["main"]


# ---------------------------------------------------------------------------
# config resolution
# ---------------------------------------------------------------------------

def _file_pairs(args) -> dict[str, str]:
    if not args.config:
        return {}
    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config(text, origin=str(path))


def _flag_pairs(args, mapping: dict[str, str]) -> dict[str, str]:
    # mapping: attribute name -> config key; unset flags (None) are skipped
    out = {}
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            out[key] = str(value)
    return out


def _resolve(args, kind: str | None, extra: dict[str, str] | None = None,
             base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Layer defaults < config file < flags and build the experiment config."""
    pairs: dict[str, str] = {}
    if base is not None:
        pairs.update({k: str(v) for k, v in base.echo().items()})
    pairs.update(_file_pairs(args))
    if kind is not None:
        pairs["experiment"] = kind
    if extra:
        pairs.update(extra)
    pairs.update(_flag_pairs(args, {"seed": "seed", "out": "out"}))
    return build_experiment_config(pairs)


def _tool_config(args, extra: dict[str, str] | None = None) -> ExperimentConfig:
    # single-step tools only harvest sub-configs; the kind is never run, so
    # force a neutral one and let "out" be a plain file path
    pairs = _file_pairs(args)
    pairs["experiment"] = "mode-collapse"
    if extra:
        pairs.update(extra)
    pairs.update(_flag_pairs(args, {"seed": "seed", "out": "out"}))
    if "out" not in pairs:
        raise ConfigError("--out is required")
    return build_experiment_config(pairs)


def _report(bundle, lines: dict | None = None) -> None:
    if lines:
        for k, v in lines.items():
            print(f"{k} = {v}")
    print(f"report: {bundle.out_dir}")


# ---------------------------------------------------------------------------
# single-step tools
# ---------------------------------------------------------------------------

def _cmd_gen_data(args) -> None:
    extra = _flag_pairs(args, {
        "kind": "data.kind", "n": "data.n", "dim": "data.dim",
        "components": "data.components", "radius": "data.radius",
        "sigma": "data.sigma", "separation": "data.separation",
    })
    cfg = _tool_config(args, extra)
    if args.gan is not None:
        run = load_checkpoint(args.gan)
        if not isinstance(run, GanRun):
            raise ContractViolation("gen-data --gan needs a GAN run checkpoint")
        data = generate(run.final, cfg.data.n, Rng(cfg.seed))
    else:
        if cfg.data.kind == "external":
            raise ConfigError("gen-data draws from a built-in testbed (ring, blobs, sphere)")
        _, data = _true_data(cfg.data, Rng(cfg.seed))
    save_dataset(data, cfg.out)
    if isinstance(data, LabeledDataset):
        print(f"wrote {cfg.out} ({data.x.shape[0]} rows, d={data.dim}, C={data.class_count})")
    else:
        print(f"wrote {cfg.out} ({data.shape[0]} rows, d={data.shape[1]})")


def _cmd_train_gan(args) -> None:
    extra = _flag_pairs(args, {
        "latent_dim": "gan.latent_dim", "iterations": "gan.iterations",
        "checkpoint_every": "gan.checkpoint_every",
        "learning_rate": "gan.learning_rate", "batch_size": "gan.batch_size",
    })
    cfg = _tool_config(args, extra)
    data = load_dataset(args.data)
    x = data.x if isinstance(data, LabeledDataset) else data
    gan_cfg = replace(cfg.gan, data_dim=x.shape[1])
    run = train_vanilla_gan(x, gan_cfg, Rng(cfg.seed))
    save_checkpoint(run, cfg.out)
    print(f"wrote {cfg.out} ({len(run.checkpoints)} checkpoints, final step {run.final.step})")


def _cmd_train_classifier(args) -> None:
    extra = _flag_pairs(args, {
        "iterations": "classifier.iterations",
        "learning_rate": "classifier.learning_rate",
        "batch_size": "classifier.batch_size",
    })
    cfg = _tool_config(args, extra)
    data = load_dataset(args.data)
    if not isinstance(data, LabeledDataset):
        raise ContractViolation("train-classifier needs a labeled dataset")
    arch = MlpArch(data.dim, (), data.class_count, "softmax")
    train_cfg = replace(cfg.classifier, seed=cfg.seed if args.seed is not None else cfg.classifier.seed)
    params, fit = train_classifier(data, arch, train_cfg)
    save_checkpoint(params, cfg.out)
    print(f"wrote {cfg.out} (train accuracy {fit.train_accuracy:.4f})")


def _cmd_annotate(args) -> None:
    cfg = _tool_config(args)
    obj = load_checkpoint(args.params)
    if isinstance(obj, GanRun):
        raise ContractViolation("annotate needs classifier parameters, got a GAN run")
    if obj.head != "softmax":
        raise ContractViolation(f"annotate needs a softmax classifier, got head {obj.head!r}")
    data = load_dataset(args.data)
    labeled = isinstance(data, LabeledDataset)
    x = data.x if labeled else data
    probs = predict(obj, x)
    labels = np.argmax(probs, axis=1).astype(np.int64)
    source = args.source or (data.source if labeled else "external")
    out = LabeledDataset(x, labels, class_count=probs.shape[1], source=source)
    save_dataset(out, cfg.out)
    print(f"wrote {cfg.out} ({x.shape[0]} rows, C={probs.shape[1]})")


# ---------------------------------------------------------------------------
# report pipelines
# ---------------------------------------------------------------------------

def _cmd_mode_report(args) -> None:
    cfg = _resolve(args, "mode-collapse")
    bundle = run_experiment(cfg, workers=args.parallel)
    lines = {}
    for seed, tv, missing in zip(bundle.values["seeds"],
                                 bundle.values["tv_from_uniform"],
                                 bundle.values["missing_modes"]):
        lines[f"seed {seed} tv_from_uniform"] = tv
        lines[f"seed {seed} missing_modes"] = missing
    _report(bundle, lines)


def _cmd_boundary_report(args) -> None:
    cfg = _resolve(args, "boundary-distortion")
    bundle = run_experiment(cfg, workers=args.parallel)
    acc = bundle.values["mean_test_accuracy"]
    _report(bundle, {f"test_accuracy[{s}]": acc[s] for s in bundle.values["sources"]})


def _external_extra(args) -> dict[str, str]:
    extra = {"data.kind": "external"}
    if args.true is not None:
        extra["data.true_path"] = args.true
    if args.synthetic is not None:
        extra["data.synthetic_path"] = args.synthetic
    return extra


def _cmd_spectrum(args) -> None:
    cfg = _resolve(args, "audit-external", _external_extra(args))
    bundle = run_experiment(cfg, workers=args.parallel)
    _report(bundle, {k: bundle.values[k] for k in
                     ("true_decay_ratio", "synthetic_decay_ratio", "below_half_fraction")})


def _cmd_score(args) -> None:
    cfg = _resolve(args, "audit-external", _external_extra(args))
    bundle = run_experiment(cfg, workers=args.parallel)
    _report(bundle, bundle.values)


def _cmd_demo(args) -> None:
    builder = {"fig1a": fig1a_config, "fig1b": fig1b_config}[args.figure]
    base = builder(out=f"{args.figure}-report")
    cfg = _resolve(args, None, base=base)
    bundle = run_experiment(cfg, workers=args.parallel)
    if args.figure == "fig1a":
        _report(bundle, {
            "true_decay_ratios": bundle.values["true_decay_ratios"],
            "synthetic_decay_ratios": bundle.values["synthetic_decay_ratios"],
        })
    else:
        _report(bundle, {
            "mean_angle": bundle.values["mean_angle"],
            "positive_gaps": bundle.values["positive_gaps"],
        })


def _cmd_run(args) -> None:
    path = Path(args.config_path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    pairs = parse_config(text, origin=str(path))
    pairs.update(_file_pairs(args))
    pairs.update(_flag_pairs(args, {"seed": "seed", "out": "out"}))
    cfg = build_experiment_config(pairs)
    bundle = run_experiment(cfg, workers=args.parallel)
    _report(bundle)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="base RNG seed (default 0)")
    common.add_argument("--out", help="output file or report directory")
    common.add_argument("--parallel", type=int, default=1, metavar="N",
                        help="worker threads for independent sub-runs")
    common.add_argument("--config", help="key = value settings file")

    parser = argparse.ArgumentParser(
        prog="ganshift",
        description="Quantify distribution shift in generative models via classification.",
    )
    parser.add_argument("--version", action="version", version=f"ganshift {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("gen-data", parents=[common],
                       help="sample a testbed dataset (or a trained GAN) to CSV")
    p.add_argument("--kind", choices=("ring", "blobs", "sphere"))
    p.add_argument("--gan", help="sample from this GAN run checkpoint instead")
    p.add_argument("--n", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--components", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--separation", type=float)
    p.set_defaults(handler=_cmd_gen_data)

    p = sub.add_parser("train-gan", parents=[common],
                       help="train a GAN on a dataset, save the checkpointed run")
    p.add_argument("--data", required=True, help="training dataset CSV")
    p.add_argument("--latent-dim", type=int, dest="latent_dim")
    p.add_argument("--iterations", type=int)
    p.add_argument("--checkpoint-every", type=int, dest="checkpoint_every")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.set_defaults(handler=_cmd_train_gan)

    p = sub.add_parser("train-classifier", parents=[common],
                       help="train a softmax classifier on a labeled dataset")
    p.add_argument("--data", required=True, help="labeled dataset CSV")
    p.add_argument("--iterations", type=int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.set_defaults(handler=_cmd_train_classifier)

    p = sub.add_parser("annotate", parents=[common],
                       help="label a sample set with a trained classifier")
    p.add_argument("--data", required=True, help="dataset CSV (labels, if any, are ignored)")
    p.add_argument("--params", required=True, help="classifier checkpoint")
    p.add_argument("--source", choices=SOURCE_TAGS,
                   help="source tag for the output (default: keep the input's)")
    p.set_defaults(handler=_cmd_annotate)

    p = sub.add_parser("mode-report", parents=[common],
                       help="mode-coverage experiment: GAN, annotator, histogram")
    p.set_defaults(handler=_cmd_mode_report)

    p = sub.add_parser("boundary-report", parents=[common],
                       help="boundary-distortion experiment over sample-size factors")
    p.set_defaults(handler=_cmd_boundary_report)

    p = sub.add_parser("spectrum", parents=[common],
                       help="covariance-spectrum comparison of two sample sets")
    p.add_argument("--true", help="reference dataset CSV")
    p.add_argument("--synthetic", help="generated dataset CSV")
    p.set_defaults(handler=_cmd_spectrum)

    p = sub.add_parser("score", parents=[common],
                       help="print every audit metric for a pair of sample sets")
    p.add_argument("--true", help="reference dataset CSV")
    p.add_argument("--synthetic", help="generated dataset CSV")
    p.set_defaults(handler=_cmd_score)

    p = sub.add_parser("demo", parents=[common],
                       help="run a pinned-default demo experiment")
    p.add_argument("figure", choices=("fig1a", "fig1b"))
    p.set_defaults(handler=_cmd_demo)

    p = sub.add_parser("run", parents=[common],
                       help="run the experiment described by a config file")
    p.add_argument("config_path", metavar="config", help="experiment config file")
    p.set_defaults(handler=_cmd_run)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        args.handler(args)
    except (ConfigError, ContractViolation, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (CheckpointFormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
