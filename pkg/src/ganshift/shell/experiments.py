"""Experiment pipelines behind the CLI: each takes a resolved config, runs
one protocol end to end, and leaves a self-describing report directory.

Every pipeline writes CSV tables (17-significant-digit cells), SVG plots,
and a ``manifest.json`` that echoes the full config, library versions, the
derived seed list, and wall time; a sequential rerun of the same manifest
reproduces the CSV bytes exactly. On failure the manifest is still written,
with a FAILED status and the step that broke.

The two demo pipelines carry pinned defaults. For the boundary-skew demo the
angle threshold below is calibrated once against the analytic optimal
boundaries: with class means along the diagonal and the negative class's
x-variance shrunk by 0.01, the pooled-covariance boundary normal rotates by
18.2 degrees, so the demo requires a mean learned-boundary rotation above
15 degrees (margin for finite-sample training noise; independently trained
classifiers on undistorted data stay near 5 degrees on average).
"""

from __future__ import annotations

import json
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import __version__
from ..audit import (
    boundary_distortion_experiment,
    boundary_skew,
    gaussian_fit_kl,
    label_correctness,
    mean_discrepancy,
    mahalanobis_discrepancy,
    mode_collapse_experiment,
    mode_histogram,
    modified_inception_score,
    moments,
    spectrum_report,
)
from ..distributions import (
    BayesAnnotator,
    GaussianSpec,
    LabeledDataset,
    MixtureSpec,
    distorted_gaussian,
    ring_mixture,
    sample_gaussian,
    sample_mixture,
)
from ..errors import ConfigError, GanshiftError
from ..gan import GanConfig, generate, train_vanilla_gan
from ..neural import MlpArch, TrainConfig, predict, train_classifier
from ..numkit import Rng
from .config import AuditSpec, DataSpec, ExperimentConfig
from .dataio import load_dataset, write_csv
from .svgplot import bar_plot, line_plot

__all__ = [
    "ReportBundle",
    "run_experiment",
    "demo_fig1a",
    "demo_fig1b",
    "fig1a_config",
    "fig1b_config",
    "FIG1B_ANGLE_THRESHOLD_DEG",
]

# fig 1(a) defaults: 75-D spherical true data, default GAN, 1e5-sample spectra
FIG1A_DIM = 75
FIG1A_TRAIN_N = 10_000
FIG1A_EVAL_N = 100_000
FIG1A_SEEDS = 5

# fig 1(b) defaults: 2-D blobs, negative-class x-variance scaled by 0.01
FIG1B_SEPARATION = 4.0
FIG1B_TRAIN_PER_CLASS = 1_000
FIG1B_HOLDOUT_PER_CLASS = 2_000
FIG1B_XVAR_FACTOR = 0.01
FIG1B_SEEDS = 10
FIG1B_ANGLE_THRESHOLD_DEG = 15.0
_FIG1B_CLASSIFIER = TrainConfig(learning_rate=0.05, batch_size=128, iterations=600, seed=0)


@dataclass(frozen=True)
class ReportBundle:
    """What a pipeline left on disk, plus its headline numbers."""

    out_dir: str
    tables: tuple[str, ...]
    plots: tuple[str, ...]
    manifest_path: str
    values: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# dataset builders
# ---------------------------------------------------------------------------

def _blob_specs(spec: DataSpec) -> list[GaussianSpec]:
    # class means at the origin and separation * ones/sqrt(dim): the gap is
    # |separation| regardless of dimension, along the diagonal
    offset = spec.separation / np.sqrt(spec.dim)
    return [
        GaussianSpec(np.zeros(spec.dim), spec.sigma**2),
        GaussianSpec(np.full(spec.dim, offset), spec.sigma**2),
    ]


def _blob_data(spec: DataSpec, rng: Rng) -> LabeledDataset:
    per = spec.n // 2
    specs = _blob_specs(spec)
    x = np.vstack([sample_gaussian(s, per, rng) for s in specs])
    y = np.repeat(np.arange(2, dtype=np.int64), per)
    return LabeledDataset(x, y, class_count=2, source="true-data")


def _true_data(spec: DataSpec, rng: Rng):
    """(mixture-or-None, dataset-or-matrix) for the configured testbed."""
    if spec.kind == "ring":
        mix = ring_mixture(spec.components, spec.radius, spec.sigma, spec.dim)
        return mix, sample_mixture(mix, spec.n, rng, balanced=True)
    if spec.kind == "blobs":
        specs = _blob_specs(spec)
        mix = MixtureSpec(components=specs, weights=np.full(2, 0.5))
        return mix, _blob_data(spec, rng)
    if spec.kind == "sphere":
        x = sample_gaussian(GaussianSpec(np.zeros(spec.dim), spec.sigma**2), spec.n, rng)
        return None, x
    data = load_dataset(spec.true_path)
    return None, data


def _annotator_for(cfg: ExperimentConfig, mix, data: LabeledDataset):
    if cfg.audit.annotator == "bayes":
        if mix is None:
            raise ConfigError("audit.annotator = bayes needs a built-in testbed")
        return BayesAnnotator(mix)
    return None  # mode_collapse_experiment trains its own on the data


def _seed_list(cfg: ExperimentConfig) -> list[int]:
    return [cfg.seed + i for i in range(cfg.seeds)]


def _map_seeds(fn, seeds: list[int], workers: int) -> list:
    """Run fn(seed) per seed, optionally on worker threads; results keep
    seed order either way, so parallel runs match sequential ones."""
    if workers <= 1 or len(seeds) <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

def _run_spectrum_demo(cfg: ExperimentConfig, out: Path, workers: int):
    gan_cfg = replace(cfg.gan, data_dim=cfg.data.dim)
    n_eval = cfg.audit.n_eval

    def one_seed(seed: int):
        rng = Rng(seed)
        _, train_x = _true_data(cfg.data, rng.spawn(0))
        if isinstance(train_x, LabeledDataset):
            train_x = train_x.x
        run = train_vanilla_gan(train_x, gan_cfg, rng.spawn(1))
        true_a = sample_gaussian(
            GaussianSpec(np.zeros(cfg.data.dim), cfg.data.sigma**2), n_eval, rng.spawn(2)
        )
        true_b = sample_gaussian(
            GaussianSpec(np.zeros(cfg.data.dim), cfg.data.sigma**2), n_eval, rng.spawn(3)
        )
        syn = generate(run.final, n_eval, rng.spawn(4))
        report = spectrum_report(true_a, syn)
        m_true, m_syn = moments(true_a), moments(syn)
        return {
            "seed": seed,
            "report": report,
            "delta_mu": mean_discrepancy(m_true, m_syn),
            "mahalanobis": mahalanobis_discrepancy(m_true, m_syn),
            "kl_synthetic": gaussian_fit_kl(m_true, m_syn),
            "kl_null": gaussian_fit_kl(m_true, moments(true_b)),
        }

    results = _map_seeds(one_seed, _seed_list(cfg), workers)

    rows = [
        (
            r["seed"],
            r["report"].true_decay_ratio,
            r["report"].synthetic_decay_ratio,
            r["report"].below_half_fraction,
            r["delta_mu"],
            r["mahalanobis"],
            r["kl_synthetic"],
            r["kl_null"],
        )
        for r in results
    ]
    write_csv(
        out / "summary.csv",
        [
            "seed",
            "true_decay_ratio",
            "synthetic_decay_ratio",
            "below_half_fraction",
            "delta_mu",
            "mahalanobis",
            "kl_synthetic",
            "kl_null",
        ],
        rows,
    )
    first = results[0]["report"]
    idx = np.arange(first.true_eigenvalues.shape[0])
    write_csv(
        out / "spectrum.csv",
        ["index", "true", "synthetic"],
        zip(idx, first.true_eigenvalues, first.synthetic_eigenvalues),
    )
    line_plot(
        "covariance spectrum, true vs synthetic",
        "eigenvalue index",
        "eigenvalue",
        [
            ("true", idx, first.true_eigenvalues),
            ("synthetic", idx, first.synthetic_eigenvalues),
        ],
        out / "spectrum.svg",
    )
    values = {
        "true_decay_ratios": [r["report"].true_decay_ratio for r in results],
        "synthetic_decay_ratios": [r["report"].synthetic_decay_ratio for r in results],
        "below_half_fractions": [r["report"].below_half_fraction for r in results],
        "delta_mu": [r["delta_mu"] for r in results],
        "kl_synthetic": [r["kl_synthetic"] for r in results],
        "kl_null": [r["kl_null"] for r in results],
    }
    return ["summary.csv", "spectrum.csv"], ["spectrum.svg"], values


def _run_skew_demo(cfg: ExperimentConfig, out: Path, workers: int):
    spec = cfg.data
    true_specs = _blob_specs(spec)
    syn_specs = [distorted_gaussian(true_specs[0], 0, FIG1B_XVAR_FACTOR), true_specs[1]]
    arch = MlpArch(spec.dim, (), 2, "softmax")
    per_train = spec.n // 2

    def build(specs, n_per, rng, source):
        x = np.vstack([sample_gaussian(s, n_per, rng) for s in specs])
        y = np.repeat(np.arange(2, dtype=np.int64), n_per)
        return LabeledDataset(x, y, class_count=2, source=source)

    def one_seed(seed: int):
        rng = Rng(seed)
        train_true = build(true_specs, per_train, rng.spawn(0), "true-data")
        train_syn = build(syn_specs, per_train, rng.spawn(1), "gan-data")
        holdout = build(true_specs, FIG1B_HOLDOUT_PER_CLASS, rng.spawn(2), "true-data")
        p_true, _ = train_classifier(train_true, arch, cfg.classifier)
        p_syn, _ = train_classifier(train_syn, arch, cfg.classifier)
        skew = boundary_skew(p_true, p_syn, holdout)
        acc_true = float(
            np.mean(np.argmax(predict(p_true, holdout.x), axis=1) == holdout.y)
        )
        return {
            "seed": seed,
            "angle": skew.angle_degrees,
            "gap": skew.accuracy_gap,
            "acc_true": acc_true,
            "acc_syn": acc_true - skew.accuracy_gap,
        }

    results = _map_seeds(one_seed, _seed_list(cfg), workers)
    write_csv(
        out / "skew.csv",
        ["seed", "angle_degrees", "accuracy_gap", "true_accuracy", "synthetic_accuracy"],
        [(r["seed"], r["angle"], r["gap"], r["acc_true"], r["acc_syn"]) for r in results],
    )
    bar_plot(
        "boundary rotation per seed",
        "seed",
        "angle (degrees)",
        [r["seed"] for r in results],
        [r["angle"] for r in results],
        out / "skew.svg",
    )
    values = {
        "angles": [r["angle"] for r in results],
        "gaps": [r["gap"] for r in results],
        "mean_angle": float(np.mean([r["angle"] for r in results])),
        "positive_gaps": int(sum(r["gap"] > 0 for r in results)),
        "threshold": FIG1B_ANGLE_THRESHOLD_DEG,
    }
    return ["skew.csv"], ["skew.svg"], values


def _run_mode_collapse(cfg: ExperimentConfig, out: Path, workers: int):
    if cfg.data.kind not in ("ring", "blobs"):
        raise ConfigError("mode-collapse needs labeled testbed data (ring or blobs)")
    gan_cfg = replace(cfg.gan, data_dim=cfg.data.dim)

    def one_seed(seed: int):
        rng = Rng(seed)
        mix, data = _true_data(cfg.data, rng.spawn(0))
        annotator = _annotator_for(cfg, mix, data)
        return mode_collapse_experiment(
            data,
            gan_cfg,
            cfg.audit.n_eval,
            rng.spawn(1),
            annotator=annotator,
            classifier_cfg=cfg.classifier,
            missing_threshold=cfg.audit.missing_threshold,
        )

    seeds = _seed_list(cfg)
    results = _map_seeds(one_seed, seeds, workers)
    c = len(results[0][0].counts)
    steps = results[0][1].steps  # every seed shares the checkpoint schedule
    write_csv(
        out / "modes.csv",
        ["seed", "step"] + [f"fraction_{k}" for k in range(c)],
        [
            (seed, int(s)) + tuple(f)
            for seed, (_, series) in zip(seeds, results)
            for s, f in zip(series.steps, series.fractions)
        ],
    )
    write_csv(
        out / "modes_counts.csv",
        ["seed", "class", "count"],
        [
            (seed, k, int(report.counts[k]))
            for seed, (report, _) in zip(seeds, results)
            for k in range(c)
        ],
    )
    mean_fractions = np.mean([series.fractions for _, series in results], axis=0)
    title = "mode fractions over training"
    if len(seeds) > 1:
        title += f" (mean of {len(seeds)} seeds)"
    line_plot(
        title,
        "step",
        "fraction",
        [(f"mode {k}", steps, mean_fractions[:, k]) for k in range(c)],
        out / "modes.svg",
    )
    values = {
        "seeds": list(seeds),
        "steps": steps.tolist(),
        "tv_from_uniform": [report.tv_from_uniform for report, _ in results],
        "missing_modes": [list(report.missing_modes) for report, _ in results],
        "fractions": [report.fractions.tolist() for report, _ in results],
    }
    return ["modes.csv", "modes_counts.csv"], ["modes.svg"], values


def _run_boundary_distortion(cfg: ExperimentConfig, out: Path, workers: int):
    if cfg.data.kind != "blobs":
        raise ConfigError("boundary-distortion needs binary testbed data (blobs)")
    gan_cfg = replace(cfg.gan, data_dim=cfg.data.dim)
    sampler = None
    if cfg.audit.synthetic == "true-sampler":
        specs = _blob_specs(cfg.data)

        def sampler(class_idx, n, rng):
            return sample_gaussian(specs[class_idx], n, rng)

    def one_seed(seed: int):
        rng = Rng(seed)
        data = _blob_data(cfg.data, rng.spawn(0))
        return boundary_distortion_experiment(
            data,
            gan_cfg,
            cfg.classifier,
            rng.spawn(1),
            downsample_factors=cfg.audit.factors,
            oversample_factor=cfg.audit.oversample,
            holdout_fraction=cfg.audit.holdout_fraction,
            synthetic_sampler=sampler,
            splits=cfg.audit.splits,
        )

    reports = _map_seeds(one_seed, _seed_list(cfg), workers)

    header = [
        "seed",
        "source",
        "factor",
        "n_rows",
        "train_accuracy",
        "test_accuracy",
        "label_correctness",
        "modified_is_mean",
        "modified_is_std",
    ]
    rows = []
    for seed, report in zip(_seed_list(cfg), reports):
        for r in report.rows:
            rows.append(
                (
                    seed,
                    r.source,
                    r.factor,
                    r.n_rows,
                    r.train_accuracy,
                    r.test_accuracy,
                    r.label_correctness,
                    r.modified_is_mean,
                    r.modified_is_std,
                )
            )
    write_csv(out / "table.csv", header, rows)

    sources = [r.source for r in reports[0].rows]
    mean_acc = {
        s: float(np.mean([rep.row(s).test_accuracy for rep in reports])) for s in sources
    }
    write_csv(
        out / "table_mean.csv",
        ["source", "mean_test_accuracy"],
        [(s, mean_acc[s]) for s in sources],
    )
    bar_plot(
        "holdout accuracy by training source",
        "training source",
        "accuracy",
        sources,
        [mean_acc[s] for s in sources],
        out / "table.svg",
    )
    values = {
        "sources": sources,
        "mean_test_accuracy": mean_acc,
        "n_rows": {r.source: r.n_rows for r in reports[0].rows},
        "holdout_n": reports[0].holdout_n,
    }
    return ["table.csv", "table_mean.csv"], ["table.svg"], values


def _run_audit_external(cfg: ExperimentConfig, out: Path, workers: int):
    if cfg.seeds != 1:
        raise ConfigError("audit-external reads fixed input files; set seeds = 1")
    true_side = load_dataset(cfg.data.true_path)
    syn_side = load_dataset(cfg.data.synthetic_path)
    true_x = true_side.x if isinstance(true_side, LabeledDataset) else true_side
    syn_x = syn_side.x if isinstance(syn_side, LabeledDataset) else syn_side

    m_true, m_syn = moments(true_x), moments(syn_x)
    report = spectrum_report(true_x, syn_x)
    metrics: list[tuple[str, object]] = [
        ("n_true", true_x.shape[0]),
        ("n_synthetic", syn_x.shape[0]),
        ("dim", true_x.shape[1]),
        ("delta_mu", mean_discrepancy(m_true, m_syn)),
        ("delta_mu_per_dim", mean_discrepancy(m_true, m_syn) / true_x.shape[1]),
        ("mahalanobis", mahalanobis_discrepancy(m_true, m_syn)),
        ("gaussian_fit_kl", gaussian_fit_kl(m_true, m_syn)),
        ("true_decay_ratio", report.true_decay_ratio),
        ("synthetic_decay_ratio", report.synthetic_decay_ratio),
        ("below_half_fraction", report.below_half_fraction),
    ]

    if isinstance(true_side, LabeledDataset) and isinstance(syn_side, LabeledDataset):
        # both sides labeled: train an annotator on the true rows and score
        # the synthetic set's default labels against it
        arch = MlpArch(true_side.dim, (), true_side.class_count, "softmax")
        params, _ = train_classifier(true_side, arch, cfg.classifier)
        probs = predict(params, syn_x)
        labels = np.argmax(probs, axis=1)
        hist = mode_histogram(
            labels, true_side.class_count, cfg.audit.missing_threshold
        )
        mis_mean, mis_std = modified_inception_score(
            probs, cfg.audit.splits, Rng(cfg.seed)
        )
        metrics += [
            ("label_correctness", label_correctness(syn_side.y, labels)),
            ("tv_from_uniform", hist.tv_from_uniform),
            ("missing_modes", ";".join(map(str, hist.missing_modes))),
            ("modified_is_mean", mis_mean),
            ("modified_is_std", mis_std),
        ]

    write_csv(out / "metrics.csv", ["metric", "value"], metrics)
    idx = np.arange(report.true_eigenvalues.shape[0])
    write_csv(
        out / "spectrum.csv",
        ["index", "true", "synthetic"],
        zip(idx, report.true_eigenvalues, report.synthetic_eigenvalues),
    )
    line_plot(
        "covariance spectrum, true vs synthetic",
        "eigenvalue index",
        "eigenvalue",
        [
            ("true", idx, report.true_eigenvalues),
            ("synthetic", idx, report.synthetic_eigenvalues),
        ],
        out / "spectrum.svg",
    )
    return ["metrics.csv", "spectrum.csv"], ["spectrum.svg"], dict(metrics)


_PIPELINES = {
    "spectrum-demo": _run_spectrum_demo,
    "boundary-skew-demo": _run_skew_demo,
    "mode-collapse": _run_mode_collapse,
    "boundary-distortion": _run_boundary_distortion,
    "audit-external": _run_audit_external,
}


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

def _write_manifest(out: Path, cfg: ExperimentConfig, status: str, outputs, wall, error=None):
    doc = {
        "status": status,
        "experiment": cfg.kind,
        "config": cfg.echo(),
        "seeds": _seed_list(cfg),
        "versions": {
            "package": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "wall_time_seconds": wall,
        "outputs": sorted(outputs),
    }
    if error is not None:
        doc["error"] = error
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ReportBundle:
    """Execute the configured pipeline and write its report directory.

    Partial outputs survive a failure; the manifest then carries status
    FAILED plus the error (pipeline errors already name their protocol
    step). ``workers`` > 1 fans independent per-seed sub-runs out to threads;
    results are assembled in seed order, so the tables do not depend on it.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.time()
    try:
        tables, plots, values = _PIPELINES[cfg.kind](cfg, out, max(1, workers))
    except (GanshiftError, OSError) as e:
        existing = [p.name for p in out.iterdir() if p.name != "manifest.json"]
        _write_manifest(out, cfg, "FAILED", existing, time.time() - start, error=str(e))
        raise
    _write_manifest(out, cfg, "ok", tables + plots, time.time() - start)
    return ReportBundle(
        out_dir=str(out),
        tables=tuple(str(out / t) for t in tables),
        plots=tuple(str(out / p) for p in plots),
        manifest_path=str(out / "manifest.json"),
        values=values,
    )


# ---------------------------------------------------------------------------
# demos with pinned defaults
# ---------------------------------------------------------------------------

def fig1a_config(out, seed: int = 0, seeds: int = FIG1A_SEEDS) -> ExperimentConfig:
    cfg = ExperimentConfig(
        kind="spectrum-demo",
        out=str(out),
        seed=seed,
        seeds=seeds,
        data=DataSpec(kind="sphere", n=FIG1A_TRAIN_N, dim=FIG1A_DIM, components=2),
        gan=GanConfig(data_dim=FIG1A_DIM),
        audit=AuditSpec(n_eval=FIG1A_EVAL_N),
    )
    return cfg


def fig1b_config(out, seed: int = 0, seeds: int = FIG1B_SEEDS) -> ExperimentConfig:
    return ExperimentConfig(
        kind="boundary-skew-demo",
        out=str(out),
        seed=seed,
        seeds=seeds,
        data=DataSpec(
            kind="blobs", n=2 * FIG1B_TRAIN_PER_CLASS, dim=2, separation=FIG1B_SEPARATION
        ),
        classifier=_FIG1B_CLASSIFIER,
    )


def demo_fig1a(out, seed: int = 0, seeds: int = FIG1A_SEEDS, workers: int = 1,
               gan: GanConfig | None = None, n_eval: int = FIG1A_EVAL_N) -> ReportBundle:
    """Spectrum-decay demo: default GAN on a 75-D spherical Gaussian."""
    cfg = fig1a_config(out, seed, seeds)
    if gan is not None:
        cfg = replace(cfg, gan=gan)
    if n_eval != FIG1A_EVAL_N:
        cfg = replace(cfg, audit=replace(cfg.audit, n_eval=n_eval))
    return run_experiment(cfg, workers=workers)


def demo_fig1b(out, seed: int = 0, seeds: int = FIG1B_SEEDS, workers: int = 1) -> ReportBundle:
    """Boundary-skew demo: logistic boundaries on distorted 2-D blobs."""
    return run_experiment(fig1b_config(out, seed, seeds), workers=workers)
