"""Vanilla GAN training on low-dimensional data, with periodic checkpoints
and sampling from any checkpointed generator.

Both networks are two ReLU hidden layers plus a final linear layer; the
discriminator adds a sigmoid. Each iteration runs ``disc_steps`` of
discriminator ascent on mean[log D(x) + log(1 - D(G(z)))], then one
generator step on the non-saturating objective (maximize mean log D(G(z))).
All stochasticity (parameter init, batch selection, latent draws) comes
from the single generator passed in, so runs are bit-reproducible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .distributions import LabeledDataset, balanced_counts
from .errors import ContractViolation, NumericError
from .neural import (
    MlpArch,
    MlpParams,
    TrainConfig,
    adam_step,
    backprop_from_output,
    forward,
    init_adam,
    init_params,
    loss_and_input_grad,
    sgd_step,
    _BatchCursor,
    _backprop,
    _loss_and_logit_grad,
    _sigmoid_clamped,
    _trace,
)
from .numkit import Rng, as_matrix, standard_normal

__all__ = [
    "GanConfig",
    "GanCheckpoint",
    "GanRun",
    "train_vanilla_gan",
    "generate",
    "generate_labeled_pair",
    "VanillaGan",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GanConfig:
    """Everything a training run needs besides the data and the seed."""

    latent_dim: int = 200
    data_dim: int = 2
    gen_hidden: tuple[int, ...] = (128, 128)
    disc_hidden: tuple[int, ...] = (128, 128)
    train: TrainConfig = field(
        default_factory=lambda: TrainConfig(learning_rate=2e-4, beta1=0.5)
    )
    total_iterations: int = 20_000
    checkpoint_every: int = 1000
    disc_steps: int = 1

    def __post_init__(self):
        if self.latent_dim < 1 or self.data_dim < 1:
            raise ContractViolation("GanConfig: dimensions must be >= 1")
        if any(h < 1 for h in self.gen_hidden) or any(h < 1 for h in self.disc_hidden):
            raise ContractViolation("GanConfig: hidden sizes must be >= 1")
        if self.total_iterations < 1 or self.checkpoint_every < 1:
            raise ContractViolation(
                "GanConfig: iterations and checkpoint_every must be >= 1"
            )
        if self.disc_steps < 1:
            raise ContractViolation("GanConfig: disc_steps must be >= 1")


@dataclass(frozen=True)
class GanCheckpoint:
    """Snapshot of both networks plus their losses at one training step."""

    step: int
    generator: MlpParams
    discriminator: MlpParams
    generator_loss: float
    discriminator_loss: float


@dataclass(frozen=True)
class GanRun:
    """A finished training run: config plus time-ordered checkpoints."""

    config: GanConfig
    checkpoints: list[GanCheckpoint]

    def __post_init__(self):
        steps = [c.step for c in self.checkpoints]
        if not steps or any(b <= a for a, b in zip(steps, steps[1:])):
            raise ContractViolation("GanRun: checkpoints must strictly increase in step")
        if steps[-1] != self.config.total_iterations:
            raise ContractViolation("GanRun: last checkpoint must be the final iteration")

    @property
    def final(self) -> GanCheckpoint:
        return self.checkpoints[-1]


def _disc_update(disc, opt_state, stacked, targets, cfg: TrainConfig):
    """One discriminator descent step; returns (params, loss, probabilities)."""
    acts, logits = _trace(disc, stacked)
    value, delta = _loss_and_logit_grad(logits, targets, "binary-CE")
    grads, _ = _backprop(disc, acts, delta, 0.0)
    if cfg.optimizer == "adam":
        disc = adam_step(disc, grads, opt_state, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    else:
        disc = sgd_step(disc, grads, cfg.learning_rate)
    return disc, value, _sigmoid_clamped(logits.reshape(-1))


def train_vanilla_gan(data, cfg: GanConfig, rng: Rng) -> GanRun:
    """Alternating-step training; checkpoints at every multiple of
    ``checkpoint_every`` plus the final iteration.

    Draw order from ``rng`` is fixed: generator init, discriminator init,
    then per step the real-batch shuffle cursor and latent batches in
    program order. A saturated discriminator batch (every sample decisively
    called real, or every sample decisively called fake) is logged as a
    warning the first time it appears; training continues.
    """
    x = as_matrix(data, "gan training data")
    n = x.shape[0]
    if n < 1:
        raise ContractViolation("train_vanilla_gan: data is empty")
    if x.shape[1] != cfg.data_dim:
        raise ContractViolation(
            f"train_vanilla_gan: data has {x.shape[1]} columns, config says {cfg.data_dim}"
        )

    gen = init_params(MlpArch(cfg.latent_dim, cfg.gen_hidden, cfg.data_dim, "linear"), rng)
    disc = init_params(MlpArch(cfg.data_dim, cfg.disc_hidden, 1, "sigmoid"), rng)
    gen_state = init_adam(gen) if cfg.train.optimizer == "adam" else None
    disc_state = init_adam(disc) if cfg.train.optimizer == "adam" else None

    batch = min(cfg.train.batch_size, n)
    cursor = _BatchCursor(n, batch, rng)
    disc_targets = np.concatenate([np.ones(batch), np.zeros(batch)])
    gen_targets = np.ones(batch)
    warned_saturation = False

    checkpoints: list[GanCheckpoint] = []
    gen_loss = disc_loss = float("nan")
    for step in range(1, cfg.total_iterations + 1):
        for _ in range(cfg.disc_steps):
            real = x[cursor.next_batch()]
            z = standard_normal(rng, batch, cfg.latent_dim)
            fake = forward(gen, z)
            stacked = np.vstack([real, fake])
            disc, disc_loss, probs = _disc_update(
                disc, disc_state, stacked, disc_targets, cfg.train
            )
            # decisive constant verdicts only; p near 0.5 at init is not saturation
            if not warned_saturation and (np.all(probs > 0.99) or np.all(probs < 0.01)):
                log.warning(
                    "discriminator saturated at step %d (batch uniformly called %s)",
                    step,
                    "real" if probs[0] > 0.5 else "fake",
                )
                warned_saturation = True

        z = standard_normal(rng, batch, cfg.latent_dim)
        fake = forward(gen, z)
        gen_loss, dfake = loss_and_input_grad(disc, fake, gen_targets, "binary-CE")
        grads = backprop_from_output(gen, z, dfake)
        if cfg.train.optimizer == "adam":
            gen = adam_step(
                gen, grads, gen_state, cfg.train.learning_rate,
                cfg.train.beta1, cfg.train.beta2, cfg.train.eps,
            )
        else:
            gen = sgd_step(gen, grads, cfg.train.learning_rate)

        if not (np.isfinite(gen_loss) and np.isfinite(disc_loss)):
            raise NumericError(f"train_vanilla_gan: non-finite loss at step {step}")

        if step % cfg.checkpoint_every == 0 or step == cfg.total_iterations:
            checkpoints.append(
                GanCheckpoint(
                    step=step,
                    generator=gen.copy(),
                    discriminator=disc.copy(),
                    generator_loss=float(gen_loss),
                    discriminator_loss=float(disc_loss),
                )
            )

    return GanRun(config=cfg, checkpoints=checkpoints)


def generate(checkpoint: GanCheckpoint, n: int, rng: Rng) -> np.ndarray:
    """n rows of G(z) with z drawn standard normal in the latent space."""
    if n < 1:
        raise ContractViolation("generate: n must be >= 1")
    z = standard_normal(rng, n, checkpoint.generator.input_dim)
    return forward(checkpoint.generator, z)


def generate_labeled_pair(
    runs: list[GanRun], n: int, rng: Rng, oversample: int = 1
) -> LabeledDataset:
    """Balanced draw from per-class generators, labeled by source index.

    Produces ``oversample * n`` rows split evenly across the runs (remainder
    to the first few), each labeled with the index of the generator that
    produced it, which serves as the default label. Rows stay grouped by
    generator; the label multiset is fixed by the counts alone.
    """
    if len(runs) < 2:
        raise ContractViolation("generate_labeled_pair: need at least two runs")
    if oversample < 1:
        raise ContractViolation("generate_labeled_pair: oversample must be >= 1")
    dims = {run.final.generator.output_dim for run in runs}
    if len(dims) > 1:
        raise ContractViolation(f"generate_labeled_pair: output dims differ: {sorted(dims)}")
    c = len(runs)
    total = oversample * n
    if total < c:
        raise ContractViolation("generate_labeled_pair: need at least one row per class")
    counts = balanced_counts(total, c)
    blocks = [generate(runs[k].final, int(counts[k]), rng) for k in range(c)]
    labels = np.repeat(np.arange(c, dtype=np.int64), counts)
    return LabeledDataset(np.vstack(blocks), labels, class_count=c, source="gan-data")


class VanillaGan:
    """Estimator-style wrapper: ``fit(X)`` trains, ``sample(n)`` generates.

    Hyperparameters mirror the training defaults; everything is reproducible
    from ``seed``. The full run (config plus checkpoints) is exposed as
    ``run_`` after fitting.
    """

    def __init__(
        self,
        latent_dim: int = 200,
        gen_hidden: tuple[int, ...] = (128, 128),
        disc_hidden: tuple[int, ...] = (128, 128),
        learning_rate: float = 2e-4,
        batch_size: int = 128,
        iterations: int = 20_000,
        disc_steps: int = 1,
        checkpoint_every: int = 1000,
        beta1: float = 0.5,
        beta2: float = 0.999,
        eps: float = 1e-8,
        seed: int = 0,
    ):
        self.latent_dim = latent_dim
        self.gen_hidden = gen_hidden
        self.disc_hidden = disc_hidden
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.iterations = iterations
        self.disc_steps = disc_steps
        self.checkpoint_every = checkpoint_every
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.seed = seed

    def get_params(self, deep: bool = True) -> dict:
        return {
            "latent_dim": self.latent_dim,
            "gen_hidden": self.gen_hidden,
            "disc_hidden": self.disc_hidden,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "iterations": self.iterations,
            "disc_steps": self.disc_steps,
            "checkpoint_every": self.checkpoint_every,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "seed": self.seed,
        }

    def set_params(self, **params) -> "VanillaGan":
        for key, value in params.items():
            if key not in self.get_params():
                raise ContractViolation(f"VanillaGan: unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X, y=None) -> "VanillaGan":
        X = as_matrix(X, "X")
        cfg = GanConfig(
            latent_dim=self.latent_dim,
            data_dim=X.shape[1],
            gen_hidden=tuple(int(h) for h in self.gen_hidden),
            disc_hidden=tuple(int(h) for h in self.disc_hidden),
            train=TrainConfig(
                learning_rate=self.learning_rate,
                batch_size=self.batch_size,
                beta1=self.beta1,
                beta2=self.beta2,
                eps=self.eps,
                seed=self.seed,
            ),
            total_iterations=self.iterations,
            checkpoint_every=self.checkpoint_every,
            disc_steps=self.disc_steps,
        )
        self.run_ = train_vanilla_gan(X, cfg, Rng(self.seed))
        self.n_features_in_ = X.shape[1]
        return self

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        """Draw from the final generator; same (n, seed) gives same rows."""
        if not hasattr(self, "run_"):
            raise ContractViolation("VanillaGan: call fit before sample")
        return generate(self.run_.final, n, Rng(self.seed).spawn(seed + 1))
