"""Analytic testbed distributions: Gaussians, finite mixtures, exact samplers,
exact posterior annotation, and the labeled-dataset container used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractViolation
from .numkit import Rng, SymEig, as_matrix, as_vector, standard_normal, sym_eig

__all__ = [
    "GaussianSpec",
    "MixtureSpec",
    "LabeledDataset",
    "BayesAnnotator",
    "balanced_counts",
    "sample_gaussian",
    "sample_mixture",
    "bayes_posterior",
    "distorted_gaussian",
    "ring_mixture",
    "stratified_split",
]

SOURCE_TAGS = ("true-data", "gan-data", "external")

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GaussianSpec:
    """A single Gaussian with spherical, diagonal or full covariance.

    ``cov`` is a positive scalar (spherical), a 1-D array of positive
    per-axis variances (diagonal), or a symmetric positive-definite matrix.
    """

    mean: np.ndarray
    cov: float | np.ndarray
    _eig: SymEig | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.mean = as_vector(self.mean, "GaussianSpec.mean")
        d = self.mean.shape[0]
        if np.isscalar(self.cov) or np.ndim(self.cov) == 0:
            self.cov = float(self.cov)
            if self.cov <= 0.0:
                raise ContractViolation("GaussianSpec: spherical variance must be > 0")
        else:
            arr = np.asarray(self.cov, dtype=np.float64)
            if arr.ndim == 1:
                self.cov = as_vector(arr, "GaussianSpec.cov")
                if self.cov.shape[0] != d:
                    raise ContractViolation("GaussianSpec: diagonal length != dim")
                if np.any(self.cov <= 0.0):
                    raise ContractViolation("GaussianSpec: diagonal variances must be > 0")
            elif arr.ndim == 2:
                self.cov = as_matrix(arr, "GaussianSpec.cov")
                if self.cov.shape != (d, d):
                    raise ContractViolation("GaussianSpec: covariance shape != (dim, dim)")
                eig = sym_eig(self.cov)
                if eig.eigenvalues[-1] <= 0.0:
                    raise ContractViolation(
                        "GaussianSpec: covariance not positive-definite "
                        f"(min eigenvalue {eig.eigenvalues[-1]:.3e})"
                    )
                self._eig = eig
            else:
                raise ContractViolation("GaussianSpec: cov must be scalar, 1-D or 2-D")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def kind(self) -> str:
        if isinstance(self.cov, float):
            return "spherical"
        return "diagonal" if self.cov.ndim == 1 else "full"

    def diagonal_variances(self) -> np.ndarray:
        """Per-axis variances; only valid for spherical/diagonal covariance."""
        if self.kind == "spherical":
            return np.full(self.dim, self.cov)
        if self.kind == "diagonal":
            return self.cov.copy()
        raise ContractViolation("diagonal_variances: covariance is full")

    def log_density(self, x: np.ndarray) -> np.ndarray:
        """Log density of each row of ``x``, computed in a stable form."""
        x = as_matrix(x, "log_density input")
        if x.shape[1] != self.dim:
            raise ContractViolation("log_density: dimension mismatch")
        centered = x - self.mean
        if self.kind == "spherical":
            quad = np.sum(centered * centered, axis=1) / self.cov
            logdet = self.dim * np.log(self.cov)
        elif self.kind == "diagonal":
            quad = np.sum(centered * centered / self.cov, axis=1)
            logdet = float(np.sum(np.log(self.cov)))
        else:
            lam = self._eig.eigenvalues
            proj = centered @ self._eig.eigenvectors
            quad = np.sum(proj * proj / lam, axis=1)
            logdet = float(np.sum(np.log(lam)))
        return -0.5 * (self.dim * _LOG_2PI + logdet + quad)


@dataclass
class MixtureSpec:
    """Finite Gaussian mixture; weights sum to one within 1e-12."""

    components: list[GaussianSpec]
    weights: np.ndarray

    def __post_init__(self):
        if not self.components:
            raise ContractViolation("MixtureSpec: needs at least one component")
        self.weights = as_vector(self.weights, "MixtureSpec.weights")
        if self.weights.shape[0] != len(self.components):
            raise ContractViolation("MixtureSpec: weights length != component count")
        if np.any(self.weights < 0.0):
            raise ContractViolation("MixtureSpec: weights must be >= 0")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ContractViolation("MixtureSpec: weights must sum to 1 within 1e-12")
        d = self.components[0].dim
        if any(c.dim != d for c in self.components):
            raise ContractViolation("MixtureSpec: components disagree on dimension")

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def n_components(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class LabeledDataset:
    """Samples with integer class labels and a provenance tag."""

    x: np.ndarray
    y: np.ndarray
    class_count: int
    source: str

    def __post_init__(self):
        object.__setattr__(self, "x", as_matrix(self.x, "LabeledDataset.x"))
        y = np.ascontiguousarray(self.y, dtype=np.int64)
        if y.ndim != 1 or y.shape[0] != self.x.shape[0]:
            raise ContractViolation("LabeledDataset: y must be 1-D with one label per row")
        if self.class_count < 1:
            raise ContractViolation("LabeledDataset: class_count must be >= 1")
        if y.size and (y.min() < 0 or y.max() >= self.class_count):
            raise ContractViolation("LabeledDataset: labels must lie in [0, class_count)")
        if self.source not in SOURCE_TAGS:
            raise ContractViolation(f"LabeledDataset: unknown source tag {self.source!r}")
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.class_count)

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.x[idx].copy(), self.y[idx].copy(), self.class_count, self.source)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def balanced_counts(n: int, c: int) -> np.ndarray:
    """Split ``n`` rows over ``c`` classes: floor(n/c) each, remainder to the
    first n mod c classes. The single remainder rule used package-wide."""
    if c < 1 or n < c:
        raise ContractViolation(f"balanced_counts: need n >= c >= 1, got n={n}, c={c}")
    counts = np.full(c, n // c, dtype=np.int64)
    counts[: n % c] += 1
    return counts


def sample_gaussian(spec: GaussianSpec, n: int, rng: Rng) -> np.ndarray:
    """n i.i.d. rows from ``spec``; full covariance via its eigen-transform."""
    if n < 1:
        raise ContractViolation("sample_gaussian: n must be >= 1")
    z = standard_normal(rng, n, spec.dim)
    if spec.kind == "spherical":
        return spec.mean + np.sqrt(spec.cov) * z
    if spec.kind == "diagonal":
        return spec.mean + np.sqrt(spec.cov) * z
    eig = spec._eig
    return spec.mean + (z * np.sqrt(eig.eigenvalues)) @ eig.eigenvectors.T


def sample_mixture(spec: MixtureSpec, n: int, rng: Rng, balanced: bool = True) -> LabeledDataset:
    """Draw ``n`` labeled rows; labels are component indices, source "true-data".

    Balanced mode draws exactly floor(n / C) rows per component, with one
    extra row for each of the first n mod C components, then shuffles rows.
    Unbalanced mode draws component indices i.i.d. by weight.
    """
    c = spec.n_components
    if balanced:
        if n < c:
            raise ContractViolation("sample_mixture: balanced draw needs n >= component count")
        counts = balanced_counts(n, c)
        labels = np.repeat(np.arange(c, dtype=np.int64), counts)
    else:
        if n < 1:
            raise ContractViolation("sample_mixture: n must be >= 1")
        cum = np.cumsum(spec.weights)
        cum[-1] = 1.0
        labels = np.searchsorted(cum, rng.uniform(n), side="right").astype(np.int64)
        counts = np.bincount(labels, minlength=c)
    x = np.empty((n, spec.dim))
    for k in range(c):
        if counts[k] == 0:
            continue
        x[labels == k] = sample_gaussian(spec.components[k], int(counts[k]), rng)
    if balanced:
        perm = rng.permutation(n)
        x, labels = x[perm], labels[perm]
    return LabeledDataset(x, labels, class_count=c, source="true-data")


def bayes_posterior(spec: MixtureSpec, x: np.ndarray) -> np.ndarray:
    """Exact component posteriors for each row of ``x``.

    Row k is w_k N(x; mu_k, Sigma_k) normalized over components, evaluated in
    log space with the log-sum-exp trick so high-dimensional densities do not
    underflow. Rows sum to 1.
    """
    x = as_matrix(x, "bayes_posterior input")
    if x.shape[1] != spec.dim:
        raise ContractViolation("bayes_posterior: x dimension != mixture dimension")
    with np.errstate(divide="ignore"):
        log_w = np.log(spec.weights)
    log_joint = np.stack(
        [log_w[k] + spec.components[k].log_density(x) for k in range(spec.n_components)],
        axis=1,
    )
    peak = np.max(log_joint, axis=1, keepdims=True)
    shifted = np.exp(log_joint - peak)
    probs = shifted / np.sum(shifted, axis=1, keepdims=True)
    return probs


def distorted_gaussian(spec: GaussianSpec, axis: int, variance_factor: float) -> GaussianSpec:
    """Copy of ``spec`` with the variance along one axis scaled by a factor.

    Returns a diagonal-covariance spec; only spherical and diagonal inputs
    are supported.
    """
    if spec.kind == "full":
        raise ContractViolation("distorted_gaussian: input must be spherical or diagonal")
    if variance_factor <= 0.0:
        raise ContractViolation("distorted_gaussian: variance_factor must be > 0")
    if not 0 <= axis < spec.dim:
        raise ContractViolation(f"distorted_gaussian: axis {axis} out of range for dim {spec.dim}")
    variances = spec.diagonal_variances()
    variances[axis] *= variance_factor
    return GaussianSpec(mean=spec.mean.copy(), cov=variances)


def ring_mixture(
    n_components: int = 5,
    radius: float = 10.0,
    sigma: float = 1.0,
    dim: int = 2,
) -> MixtureSpec:
    """Equal-weight spherical components evenly spaced on a circle.

    The circle lives in the first two coordinates; any further coordinates
    are zero-mean. This is the default multi-modal testbed.
    """
    if dim < 2:
        raise ContractViolation("ring_mixture: dim must be >= 2")
    angles = 2.0 * np.pi * np.arange(n_components) / n_components
    components = []
    for a in angles:
        mean = np.zeros(dim)
        mean[0] = radius * np.cos(a)
        mean[1] = radius * np.sin(a)
        components.append(GaussianSpec(mean=mean, cov=sigma * sigma))
    weights = np.full(n_components, 1.0 / n_components)
    return MixtureSpec(components=components, weights=weights)


def stratified_split(
    data: LabeledDataset, holdout_fraction: float, rng: Rng
) -> tuple[LabeledDataset, LabeledDataset]:
    """Seeded per-class split into (train, holdout) keeping class proportions."""
    if not 0.0 < holdout_fraction <= 0.5:
        raise ContractViolation("stratified_split: holdout_fraction must be in (0, 0.5]")
    train_idx: list[np.ndarray] = []
    hold_idx: list[np.ndarray] = []
    for k in range(data.class_count):
        members = np.flatnonzero(data.y == k)
        if members.size == 0:
            continue
        perm = rng.permutation(members.size)
        n_hold = max(1, int(round(members.size * holdout_fraction)))
        hold_idx.append(members[perm[:n_hold]])
        train_idx.append(members[perm[n_hold:]])
    train = np.sort(np.concatenate(train_idx))
    hold = np.sort(np.concatenate(hold_idx))
    return data.subset(train), data.subset(hold)


class BayesAnnotator:
    """Oracle annotator: exact mixture posteriors in classifier clothing.

    Exposes the same predict/predict_proba surface as a trained classifier so
    experiments can swap a learned annotator for the exact one.
    """

    def __init__(self, mixture: MixtureSpec):
        self.mixture = mixture

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return bayes_posterior(self.mixture, x)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)

    def describe(self) -> str:
        return f"bayes-oracle(C={self.mixture.n_components}, d={self.mixture.dim})"
