"""Measurement core: mode-collapse analysis, boundary-distortion analysis,
and the shift metrics both lean on.

The common thread is classification as a measuring device. A generator is
probed by drawing samples and passing them to an annotator (a classifier
trained on the true data, or the exact posterior oracle on analytic
testbeds); the label distribution, annotator confidence, and downstream
classifier accuracy then quantify how far the generated distribution drifted
from the truth even when each individual sample looks plausible.

Metric conventions worth pinning down once:

* A prediction matrix is an n x C array of class posteriors; rows must sum
  to 1 within 1e-9.
* ``mean_discrepancy`` evaluates (mu_T - mu_G)^T Sigma_T (mu_T - mu_G) with
  the covariance itself, not its inverse; the conventional Mahalanobis form
  is exposed separately as :func:`mahalanobis_discrepancy` so the two are
  never confused.
* ``gaussian_fit_kl`` is the closed-form KL between Gaussian moment fits,
  KL(T || G); direction matters and is part of the name's contract.
* Down-sampling by M keeps a uniformly random floor(n/M) subset;
  over-sampling by L draws L*N rows from the generators.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .distributions import LabeledDataset, balanced_counts, stratified_split
from .errors import ContractViolation, GanshiftError, NumericError
from .gan import GanConfig, GanRun, generate, generate_labeled_pair, train_vanilla_gan
from .neural import MlpArch, MlpParams, TrainConfig, predict, train_classifier
from .numkit import Rng, SymEig, as_matrix, sym_eig

__all__ = [
    "ModeReport",
    "TemporalModeSeries",
    "MomentSummary",
    "SpectrumReport",
    "BoundaryRow",
    "BoundaryReport",
    "BoundarySkew",
    "check_prediction_matrix",
    "mode_histogram",
    "mode_collapse_experiment",
    "temporal_mode_series",
    "label_correctness",
    "confidence_histogram",
    "modified_inception_score",
    "moments",
    "mean_discrepancy",
    "mahalanobis_discrepancy",
    "gaussian_fit_kl",
    "spectrum_report",
    "downsample",
    "boundary_distortion_experiment",
    "boundary_skew",
    "downsampling_curve",
]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# report containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeReport:
    """Class histogram of annotated samples plus collapse summaries."""

    counts: np.ndarray
    fractions: np.ndarray
    tv_from_uniform: float
    missing_modes: tuple[int, ...]

    def __post_init__(self):
        if abs(float(np.sum(self.fractions)) - 1.0) > 1e-9:
            raise ContractViolation("ModeReport: fractions must sum to 1")
        if not 0.0 <= self.tv_from_uniform <= 1.0:
            raise ContractViolation("ModeReport: tv must lie in [0, 1]")


@dataclass(frozen=True)
class TemporalModeSeries:
    """Per-checkpoint class fractions over the course of GAN training."""

    steps: np.ndarray
    fractions: np.ndarray

    def __post_init__(self):
        if self.fractions.ndim != 2 or self.steps.shape[0] != self.fractions.shape[0]:
            raise ContractViolation("TemporalModeSeries: one fraction row per step")
        if np.any(np.diff(self.steps) <= 0):
            raise ContractViolation("TemporalModeSeries: steps must strictly increase")
        if np.max(np.abs(np.sum(self.fractions, axis=1) - 1.0)) > 1e-9:
            raise ContractViolation("TemporalModeSeries: rows must be fraction vectors")


@dataclass(frozen=True)
class MomentSummary:
    """Sample mean and covariance (n-1 denominator) of one sample set."""

    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ContractViolation("MomentSummary: needs n >= 2")
        scale = max(1.0, float(np.max(np.abs(self.cov))))
        if float(np.max(np.abs(self.cov - self.cov.T))) > 1e-9 * scale:
            raise ContractViolation("MomentSummary: covariance must be symmetric")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class SpectrumReport:
    """Covariance spectra of a true and a synthetic sample set, compared."""

    true_eigenvalues: np.ndarray
    synthetic_eigenvalues: np.ndarray
    true_decay_ratio: float
    synthetic_decay_ratio: float
    below_half_fraction: float

    def __post_init__(self):
        for side in (self.true_eigenvalues, self.synthetic_eigenvalues):
            if np.any(np.diff(side) > 1e-12):
                raise ContractViolation("SpectrumReport: eigenvalues must be sorted desc")
        for r in (self.true_decay_ratio, self.synthetic_decay_ratio):
            if not 0.0 <= r <= 1.0:
                raise ContractViolation("SpectrumReport: decay ratios must lie in [0, 1]")


@dataclass(frozen=True)
class BoundaryRow:
    """One data source's row in the distortion report."""

    source: str
    factor: int
    n_rows: int
    train_accuracy: float
    test_accuracy: float
    label_correctness: float
    modified_is_mean: float
    modified_is_std: float

    def __post_init__(self):
        for v in (self.train_accuracy, self.test_accuracy, self.label_correctness):
            if not 0.0 <= v <= 1.0:
                raise ContractViolation("BoundaryRow: accuracies must lie in [0, 1]")


@dataclass(frozen=True)
class BoundaryReport:
    """Identical classifiers trained per source, all tested on true holdout."""

    rows: tuple[BoundaryRow, ...]
    classifier_desc: str
    classifier_params: dict[str, MlpParams]
    holdout_n: int

    def row(self, source: str) -> BoundaryRow:
        for r in self.rows:
            if r.source == source:
                return r
        raise KeyError(source)


@dataclass(frozen=True)
class BoundarySkew:
    """Angle between two linear decision boundaries plus the accuracy gap."""

    angle_degrees: float
    accuracy_gap: float

    def __post_init__(self):
        if not 0.0 <= self.angle_degrees <= 90.0:
            raise ContractViolation("BoundarySkew: angle must lie in [0, 90]")
        if not -1.0 <= self.accuracy_gap <= 1.0:
            raise ContractViolation("BoundarySkew: gap must lie in [-1, 1]")


# ---------------------------------------------------------------------------
# prediction-matrix plumbing
# ---------------------------------------------------------------------------

def check_prediction_matrix(probs) -> np.ndarray:
    """Validate an n x C matrix of class posteriors."""
    p = as_matrix(probs, "prediction matrix")
    if p.shape[0] < 1 or p.shape[1] < 1:
        raise ContractViolation("prediction matrix: must be nonempty")
    if np.min(p) < 0.0 or np.max(p) > 1.0 + 1e-9:
        raise ContractViolation("prediction matrix: entries must lie in [0, 1]")
    if np.max(np.abs(np.sum(p, axis=1) - 1.0)) > 1e-9:
        raise ContractViolation("prediction matrix: rows must sum to 1 within 1e-9")
    return p


# ---------------------------------------------------------------------------
# mode collapse
# ---------------------------------------------------------------------------

def mode_histogram(labels, class_count: int, missing_threshold: float = 0.01) -> ModeReport:
    """Histogram annotated labels and summarize how far from uniform they sit.

    ``tv_from_uniform`` is the total-variation distance 1/2 * sum|f_i - 1/C|;
    classes whose fraction falls below ``missing_threshold`` are reported as
    missing modes.
    """
    if class_count < 1:
        raise ContractViolation("mode_histogram: class_count must be >= 1")
    y = np.ascontiguousarray(labels, dtype=np.int64)
    if y.ndim != 1 or y.size == 0:
        raise ContractViolation("mode_histogram: labels must be a nonempty vector")
    if y.min() < 0 or y.max() >= class_count:
        raise ContractViolation("mode_histogram: labels must lie in [0, class_count)")
    counts = np.bincount(y, minlength=class_count)
    fractions = counts / y.size
    tv = 0.5 * float(np.sum(np.abs(fractions - 1.0 / class_count)))
    missing = tuple(int(k) for k in np.flatnonzero(fractions < missing_threshold))
    return ModeReport(
        counts=counts, fractions=fractions, tv_from_uniform=tv, missing_modes=missing
    )


def _default_annotator(data: LabeledDataset, cfg: TrainConfig | None):
    arch = MlpArch(data.dim, (), data.class_count, "softmax")
    params, _ = train_classifier(data, arch, cfg or TrainConfig())

    class _Learned:
        def predict_proba(self, x):
            return predict(params, x)

        def predict(self, x):
            return np.argmax(predict(params, x), axis=1)

        def describe(self):
            return f"linear-softmax(d={data.dim}, C={data.class_count})"

    return _Learned()


def temporal_mode_series(
    run: GanRun, annotator, n_eval: int, rng: Rng, class_count: int
) -> TemporalModeSeries:
    """Annotate ``n_eval`` samples from every checkpoint of a finished run."""
    if n_eval < 1:
        raise ContractViolation("temporal_mode_series: n_eval must be >= 1")
    steps, fractions = [], []
    for cp in run.checkpoints:
        labels = annotator.predict(generate(cp, n_eval, rng))
        fractions.append(np.bincount(labels, minlength=class_count) / n_eval)
        steps.append(cp.step)
    return TemporalModeSeries(
        steps=np.array(steps, dtype=np.int64), fractions=np.stack(fractions)
    )


def mode_collapse_experiment(
    data: LabeledDataset,
    gan_cfg: GanConfig,
    n_eval: int,
    rng: Rng,
    annotator=None,
    classifier_cfg: TrainConfig | None = None,
    sampler: Callable[[int, Rng], np.ndarray] | None = None,
    missing_threshold: float = 0.01,
) -> tuple[ModeReport, TemporalModeSeries]:
    """Mode-collapse protocol on a balanced multi-class dataset.

    Trains the GAN unconditionally on the unlabeled rows, trains the
    annotator on the same labeled rows (or uses the one supplied, e.g. the
    exact-posterior oracle), then annotates ``n_eval`` generated samples per
    checkpoint. Returns the final checkpoint's histogram and the full
    temporal series.

    ``sampler`` replaces the trained generator with an arbitrary
    ``(n, rng) -> matrix`` source and skips GAN training; the series then has
    a single step 0. This is the injection point for calibrating the metrics
    against constructed collapse.

    Stream derivation from ``rng``: spawn(0) trains the GAN, spawn(1) draws
    every evaluation batch in checkpoint order.
    """
    counts = data.class_counts()
    if counts.min() == 0 or counts.max() / counts.min() > 1.05:
        raise ContractViolation(
            "mode_collapse_experiment: class counts are unbalanced "
            f"(max/min = {counts.max()}/{counts.min()})"
        )
    if annotator is None:
        annotator = _default_annotator(data, classifier_cfg)

    eval_rng = rng.spawn(1)
    if sampler is not None:
        labels = annotator.predict(as_matrix(sampler(n_eval, eval_rng), "sampler output"))
        report = mode_histogram(labels, data.class_count, missing_threshold)
        series = TemporalModeSeries(
            steps=np.array([0], dtype=np.int64), fractions=report.fractions[None, :]
        )
        return report, series

    run = train_vanilla_gan(data.x, gan_cfg, rng.spawn(0))
    series = temporal_mode_series(run, annotator, n_eval, eval_rng, data.class_count)
    # the report covers the final checkpoint's evaluation batch, so it must
    # agree exactly with the last temporal row
    counts = np.rint(series.fractions[-1] * n_eval).astype(np.int64)
    tv = 0.5 * float(np.sum(np.abs(series.fractions[-1] - 1.0 / data.class_count)))
    report = ModeReport(
        counts=counts,
        fractions=series.fractions[-1],
        tv_from_uniform=tv,
        missing_modes=tuple(
            int(k) for k in np.flatnonzero(series.fractions[-1] < missing_threshold)
        ),
    )
    return report, series


# ---------------------------------------------------------------------------
# annotator-based metrics
# ---------------------------------------------------------------------------

def label_correctness(default, predicted) -> float:
    """Fraction of positions where the two label vectors agree."""
    a = np.ascontiguousarray(default, dtype=np.int64)
    b = np.ascontiguousarray(predicted, dtype=np.int64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ContractViolation("label_correctness: label vectors must match in length")
    if a.size == 0:
        raise ContractViolation("label_correctness: label vectors are empty")
    return float(np.mean(a == b))


def confidence_histogram(probs, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of per-row max probabilities over uniform bins on [1/C, 1].

    Returns (counts, edges). The boundary value 1 lands in the last bin.
    """
    p = check_prediction_matrix(probs)
    if bins < 1:
        raise ContractViolation("confidence_histogram: bins must be >= 1")
    c = p.shape[1]
    conf = np.clip(np.max(p, axis=1), 1.0 / c, 1.0)
    edges = np.linspace(1.0 / c, 1.0, bins + 1)
    counts, _ = np.histogram(conf, bins=edges)
    return counts, edges


def modified_inception_score(probs, splits: int = 10, rng: Rng | None = None) -> tuple[float, float]:
    """exp(E_x[KL(p(y|x) || p(y))]) over shuffled near-equal chunks.

    Rows are shuffled with the seeded generator, partitioned into ``splits``
    chunks whose sizes differ by at most one, and scored against each chunk's
    own marginal. Returns the mean and population standard deviation over
    chunks. Zero conditional probabilities contribute zero to the KL sum; the
    marginal of a chunk cannot be zero where any of its rows is not.
    """
    p = check_prediction_matrix(probs)
    n = p.shape[0]
    if splits < 1 or splits > n:
        raise ContractViolation(f"modified_inception_score: need 1 <= splits <= {n}")
    order = rng.permutation(n) if rng is not None else np.arange(n)
    chunks = np.array_split(p[order], splits)
    scores = []
    for chunk in chunks:
        marginal = np.mean(chunk, axis=0)
        ratio = np.ones_like(chunk)
        nz = chunk > 0.0
        ratio[nz] = chunk[nz] / np.broadcast_to(marginal, chunk.shape)[nz]
        kl_rows = np.sum(np.where(nz, chunk * np.log(ratio), 0.0), axis=1)
        scores.append(float(np.exp(np.mean(kl_rows))))
    scores = np.array(scores)
    return float(np.mean(scores)), float(np.std(scores))


# ---------------------------------------------------------------------------
# moment metrics
# ---------------------------------------------------------------------------

def moments(samples) -> MomentSummary:
    """Column means and the n-1 denominator sample covariance."""
    x = as_matrix(samples, "moments input")
    n = x.shape[0]
    if n < 2:
        raise ContractViolation("moments: needs at least 2 rows")
    mean = np.mean(x, axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return MomentSummary(mean=mean, cov=cov, n=n)


def mean_discrepancy(t: MomentSummary, g: MomentSummary) -> float:
    """(mu_T - mu_G)^T Sigma_T (mu_T - mu_G), covariance as printed."""
    if t.dim != g.dim:
        raise ContractViolation("mean_discrepancy: dimension mismatch")
    d = t.mean - g.mean
    return float(d @ t.cov @ d)


def _pd_eig(cov: np.ndarray, context: str) -> SymEig:
    """Eigendecomposition with one shot of +1e-9 I regularization."""
    eig = sym_eig(cov)
    if eig.eigenvalues[-1] <= 0.0:
        log.warning(
            "%s: covariance min eigenvalue %.3e <= 0, regularizing by +1e-9 I",
            context,
            eig.eigenvalues[-1],
        )
        eig = sym_eig(cov + 1e-9 * np.eye(cov.shape[0]))
        if eig.eigenvalues[-1] <= 0.0:
            raise NumericError(
                f"{context}: covariance irreparably singular "
                f"(min eigenvalue {eig.eigenvalues[-1]:.3e})"
            )
    return eig


def mahalanobis_discrepancy(t: MomentSummary, g: MomentSummary) -> float:
    """(mu_T - mu_G)^T Sigma_T^{-1} (mu_T - mu_G), the conventional form."""
    if t.dim != g.dim:
        raise ContractViolation("mahalanobis_discrepancy: dimension mismatch")
    eig = _pd_eig(t.cov, "mahalanobis_discrepancy")
    proj = eig.eigenvectors.T @ (t.mean - g.mean)
    return float(np.sum(proj * proj / eig.eigenvalues))


def gaussian_fit_kl(t: MomentSummary, g: MomentSummary) -> float:
    """Closed-form KL(N(mu_T, Sigma_T) || N(mu_G, Sigma_G)).

    1/2 [tr(Sigma_G^-1 Sigma_T) + (mu_G - mu_T)^T Sigma_G^-1 (mu_G - mu_T)
         - d + ln(det Sigma_G / det Sigma_T)]

    evaluated through eigendecompositions, never an explicit inverse.
    Covariances with a nonpositive eigenvalue get one +1e-9 I regularization
    (logged); anything still singular raises naming the offending eigenvalue.
    """
    if t.dim != g.dim:
        raise ContractViolation("gaussian_fit_kl: dimension mismatch")
    d = t.dim
    eig_t = _pd_eig(t.cov, "gaussian_fit_kl (true side)")
    eig_g = _pd_eig(g.cov, "gaussian_fit_kl (synthetic side)")
    inv_g = (eig_g.eigenvectors / eig_g.eigenvalues) @ eig_g.eigenvectors.T
    trace_term = float(np.sum(inv_g * t.cov))
    diff = g.mean - t.mean
    quad = float(diff @ inv_g @ diff)
    logdet = float(np.sum(np.log(eig_g.eigenvalues)) - np.sum(np.log(eig_t.eigenvalues)))
    return 0.5 * (trace_term + quad - d + logdet)


def spectrum_report(true_samples, syn_samples) -> SpectrumReport:
    """Covariance spectra of both sample sets plus decay summaries.

    Requires n >= d + 1 on both sides so the spectra are full rank by count;
    eigenvalues are floored at zero (sample covariances are semidefinite up
    to roundoff). ``below_half_fraction`` is the fraction of synthetic
    eigenvalues below half the synthetic maximum.
    """
    xt = as_matrix(true_samples, "true samples")
    xs = as_matrix(syn_samples, "synthetic samples")
    if xt.shape[1] != xs.shape[1]:
        raise ContractViolation("spectrum_report: dimension mismatch")
    d = xt.shape[1]
    for name, x in (("true", xt), ("synthetic", xs)):
        if x.shape[0] < d + 1:
            raise ContractViolation(
                f"spectrum_report: {name} side needs n >= d + 1 rows, got {x.shape[0]}"
            )
    w_true = np.maximum(sym_eig(moments(xt).cov).eigenvalues, 0.0)
    w_syn = np.maximum(sym_eig(moments(xs).cov).eigenvalues, 0.0)
    return SpectrumReport(
        true_eigenvalues=w_true,
        synthetic_eigenvalues=w_syn,
        true_decay_ratio=float(w_true[-1] / w_true[0]),
        synthetic_decay_ratio=float(w_syn[-1] / w_syn[0]),
        below_half_fraction=float(np.mean(w_syn < 0.5 * w_syn[0])),
    )


# ---------------------------------------------------------------------------
# sampling protocols
# ---------------------------------------------------------------------------

def downsample(data: LabeledDataset, m: int, rng: Rng) -> LabeledDataset:
    """Uniformly random floor(n/m) subset without replacement; m=1 permutes."""
    if m < 1:
        raise ContractViolation("downsample: m must be >= 1")
    keep = data.n // m
    if keep < 1:
        raise ContractViolation(f"downsample: n={data.n} leaves no rows at m={m}")
    return data.subset(rng.permutation(data.n)[:keep])


# ---------------------------------------------------------------------------
# boundary distortion
# ---------------------------------------------------------------------------

def _tagged(step: str):
    """Re-raise package errors with the protocol step that produced them."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, GanshiftError):
                raise type(exc)(f"{step}: {exc}") from exc
            return False

    return _Ctx()


def _linear_binary_arch(dim: int) -> MlpArch:
    return MlpArch(dim, (), 2, "softmax")


def _synthetic_dataset(
    sampler: Callable[[int, int, Rng], np.ndarray], n_total: int, dim: int, rng: Rng
) -> LabeledDataset:
    counts = balanced_counts(n_total, 2)
    blocks = []
    for k in range(2):
        block = as_matrix(sampler(k, int(counts[k]), rng), "sampler output")
        if block.shape != (int(counts[k]), dim):
            raise ContractViolation(
                f"sampler output for class {k}: expected shape ({int(counts[k])}, {dim}), "
                f"got {block.shape}"
            )
        blocks.append(block)
    labels = np.repeat(np.arange(2, dtype=np.int64), counts)
    return LabeledDataset(np.vstack(blocks), labels, class_count=2, source="external")


def boundary_distortion_experiment(
    true_data: LabeledDataset,
    gan_cfg: GanConfig,
    classifier_cfg: TrainConfig,
    rng: Rng,
    downsample_factors: Sequence[int] = (4,),
    oversample_factor: int = 10,
    holdout_fraction: float = 0.2,
    synthetic_sampler: Callable[[int, int, Rng], np.ndarray] | None = None,
    splits: int = 10,
) -> BoundaryReport:
    """Boundary-distortion protocol on a binary labeled dataset.

    Steps: split off a stratified true holdout; train one GAN per class on
    the remaining true rows (step 1); build balanced default-labeled
    synthetic sets of N and L*N rows from the final generators (step 2);
    train identically configured linear classifiers on the true rows, each
    down-sampled true subset, and both synthetic sets (steps 3-4). Every
    classifier is tested on the same true holdout. Each row also reports
    agreement between its labels and an annotator trained on the full true
    training split, plus the modified IS of the annotator's predictions.

    ``synthetic_sampler`` (class_idx, n, rng) -> matrix replaces the
    per-class GANs, the oracle-injection point: handing it the true sampler
    itself must erase the synthetic-vs-true gap.

    Stream derivation from ``rng``: spawn(0) splits the holdout, spawn(1)
    and spawn(2) train the per-class GANs, spawn(3) generates synthetic
    rows, spawn(10 + i) down-samples factor i, spawn(100 + j) shuffles the
    modified-IS chunks for row j.
    """
    if true_data.class_count != 2:
        raise ContractViolation("boundary_distortion_experiment: labels must be binary")
    if any(m < 1 for m in downsample_factors):
        raise ContractViolation("boundary_distortion_experiment: factors must be >= 1")
    if oversample_factor < 1:
        raise ContractViolation("boundary_distortion_experiment: oversample must be >= 1")

    with _tagged("step-0 (holdout split)"):
        train_true, holdout = stratified_split(true_data, holdout_fraction, rng.spawn(0))
    n = train_true.n

    with _tagged("step-2 annotator (trained on full true training split)"):
        annotator = _default_annotator(train_true, classifier_cfg)

    gen_rng = rng.spawn(3)
    if synthetic_sampler is None:
        runs: list[GanRun] = []
        for k in range(2):
            with _tagged(f"step-1 (class-{k} GAN training)"):
                class_rows = train_true.x[train_true.y == k]
                if class_rows.shape[0] < 1:
                    raise ContractViolation(f"class {k} has no rows")
                runs.append(train_vanilla_gan(class_rows, gan_cfg, rng.spawn(k + 1)))
        with _tagged("step-2 (synthetic generation)"):
            up_one = generate_labeled_pair(runs, n, gen_rng, oversample=1)
            up_l = generate_labeled_pair(runs, n, gen_rng, oversample=oversample_factor)
    else:
        with _tagged("step-2 (synthetic generation, injected sampler)"):
            up_one = _synthetic_dataset(synthetic_sampler, n, true_data.dim, gen_rng)
            up_l = _synthetic_dataset(
                synthetic_sampler, oversample_factor * n, true_data.dim, gen_rng
            )

    sources: list[tuple[str, int, LabeledDataset]] = [("true", 1, train_true)]
    for i, m in enumerate(downsample_factors):
        with _tagged(f"step-3 (down-sampling by {m})"):
            sources.append((f"down-{m}", int(m), downsample(train_true, int(m), rng.spawn(10 + i))))
    sources.append(("up-1", 1, up_one))
    sources.append((f"up-{oversample_factor}", int(oversample_factor), up_l))

    arch = _linear_binary_arch(true_data.dim)
    rows: list[BoundaryRow] = []
    trained: dict[str, MlpParams] = {}
    for j, (tag, factor, source) in enumerate(sources):
        with _tagged(f"step-4 (classifier on {tag})"):
            params, report = train_classifier(source, arch, classifier_cfg)
        trained[tag] = params
        test_labels = np.argmax(predict(params, holdout.x), axis=1)
        probs = annotator.predict_proba(source.x)
        mis_mean, mis_std = modified_inception_score(probs, splits, rng.spawn(100 + j))
        rows.append(
            BoundaryRow(
                source=tag,
                factor=factor,
                n_rows=source.n,
                train_accuracy=report.train_accuracy,
                test_accuracy=float(np.mean(test_labels == holdout.y)),
                label_correctness=label_correctness(source.y, np.argmax(probs, axis=1)),
                modified_is_mean=mis_mean,
                modified_is_std=mis_std,
            )
        )

    desc = (
        f"linear-softmax(d={true_data.dim}, C=2), {classifier_cfg.optimizer} "
        f"lr={classifier_cfg.learning_rate}, iters={classifier_cfg.iterations}, "
        f"batch={classifier_cfg.batch_size}, seed={classifier_cfg.seed}"
    )
    return BoundaryReport(
        rows=tuple(rows), classifier_desc=desc, classifier_params=trained, holdout_n=holdout.n
    )


def _boundary_normal(params: MlpParams) -> np.ndarray:
    if params.n_layers != 1:
        raise ContractViolation("boundary_skew: classifiers must be linear (no hidden layers)")
    w = params.weights[0]
    if params.head == "softmax" and w.shape[1] == 2:
        return w[:, 1] - w[:, 0]
    if params.head == "sigmoid" and w.shape[1] == 1:
        return w[:, 0]
    raise ContractViolation("boundary_skew: classifiers must be binary")


def boundary_skew(
    classifier_true: MlpParams, classifier_syn: MlpParams, true_holdout: LabeledDataset
) -> BoundarySkew:
    """Undirected angle between two linear decision boundaries, plus the
    true-holdout accuracy gap (true-trained minus synthetic-trained)."""
    n1 = _boundary_normal(classifier_true)
    n2 = _boundary_normal(classifier_syn)
    if n1.shape != n2.shape:
        raise ContractViolation("boundary_skew: input dimensions differ")
    norms = float(np.linalg.norm(n1)) * float(np.linalg.norm(n2))
    if norms == 0.0:
        raise NumericError("boundary_skew: degenerate classifier with zero-norm normal")
    cos = abs(float(n1 @ n2)) / norms
    angle = float(np.degrees(np.arccos(np.clip(cos, 0.0, 1.0))))
    acc_true = float(
        np.mean(np.argmax(predict(classifier_true, true_holdout.x), axis=1) == true_holdout.y)
    )
    acc_syn = float(
        np.mean(np.argmax(predict(classifier_syn, true_holdout.x), axis=1) == true_holdout.y)
    )
    return BoundarySkew(angle_degrees=angle, accuracy_gap=acc_true - acc_syn)


def downsampling_curve(
    data: LabeledDataset,
    classifier_cfg: TrainConfig,
    factors: Sequence[int],
    holdout_fraction: float,
    rng: Rng,
) -> list[tuple[int, float]]:
    """Test accuracy of identically configured classifiers per down-sampling
    factor, all evaluated on one shared true holdout."""
    if not factors or any(m < 1 for m in factors):
        raise ContractViolation("downsampling_curve: factors must be >= 1")
    if any(b <= a for a, b in zip(factors, factors[1:])):
        raise ContractViolation("downsampling_curve: factors must be ascending")
    train, holdout = stratified_split(data, holdout_fraction, rng.spawn(0))
    arch = MlpArch(data.dim, (), data.class_count, "softmax")
    curve = []
    for i, m in enumerate(factors):
        subset = downsample(train, int(m), rng.spawn(10 + i))
        params, _ = train_classifier(subset, arch, classifier_cfg)
        labels = np.argmax(predict(params, holdout.x), axis=1)
        curve.append((int(m), float(np.mean(labels == holdout.y))))
    return curve
