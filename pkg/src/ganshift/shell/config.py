"""Experiment configuration: flat ``key = value`` text with dotted sections.

The format is deliberately diff-friendly: one assignment per line, ``#``
comments, later assignments override earlier ones, and every command-line
flag overrides its config key. Unknown keys are rejected rather than
ignored so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import ConfigError
from ..gan import GanConfig
from ..neural import TrainConfig

__all__ = [
    "DataSpec",
    "AuditSpec",
    "ExperimentConfig",
    "parse_config",
    "build_experiment_config",
    "load_experiment_config",
]

EXPERIMENT_KINDS = (
    "spectrum-demo",
    "boundary-skew-demo",
    "mode-collapse",
    "boundary-distortion",
    "audit-external",
)


@dataclass(frozen=True)
class DataSpec:
    """Where the true data comes from: a built-in testbed or external files.

    ``ring`` is an equal-weight mixture on a circle, ``blobs`` two spherical
    classes ``separation`` apart, ``sphere`` one unlabeled spherical Gaussian,
    ``external`` CSV files named by the path fields.
    """

    kind: str = "ring"
    n: int = 2000
    dim: int = 2
    components: int = 5
    radius: float = 10.0
    sigma: float = 1.0
    separation: float = 4.0
    true_path: str | None = None
    synthetic_path: str | None = None

    def __post_init__(self):
        if self.kind not in ("ring", "blobs", "sphere", "external"):
            raise ConfigError(
                f"data.kind must be ring, blobs, sphere or external, got {self.kind!r}"
            )
        if self.n < 2 or self.dim < 1 or self.components < 2:
            raise ConfigError("data: need n >= 2, dim >= 1, components >= 2")


@dataclass(frozen=True)
class AuditSpec:
    """Knobs of the measurement protocols."""

    n_eval: int = 10_000
    splits: int = 10
    missing_threshold: float = 0.01
    bins: int = 10
    annotator: str = "learned"  # learned | bayes
    factors: tuple[int, ...] = (4,)
    oversample: int = 10
    holdout_fraction: float = 0.2
    synthetic: str = "gan"  # gan | true-sampler

    def __post_init__(self):
        if self.annotator not in ("learned", "bayes"):
            raise ConfigError(f"audit.annotator must be learned or bayes, got {self.annotator!r}")
        if self.synthetic not in ("gan", "true-sampler"):
            raise ConfigError(
                f"audit.synthetic must be gan or true-sampler, got {self.synthetic!r}"
            )
        if self.n_eval < 1 or self.splits < 1 or self.bins < 1 or self.oversample < 1:
            raise ConfigError("audit: counts must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved run: what to execute, on what, where to write."""

    kind: str
    out: str
    seed: int = 0
    seeds: int = 1
    data: DataSpec = field(default_factory=DataSpec)
    gan: GanConfig = field(default_factory=GanConfig)
    classifier: TrainConfig = field(default_factory=TrainConfig)
    audit: AuditSpec = field(default_factory=AuditSpec)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(
                f"experiment must be one of {', '.join(EXPERIMENT_KINDS)}; got {self.kind!r}"
            )
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        if not self.out:
            raise ConfigError("out directory must be set")
        if self.kind == "audit-external":
            for label, p in (("data.true_path", self.data.true_path),
                             ("data.synthetic_path", self.data.synthetic_path)):
                if p is None:
                    raise ConfigError(f"audit-external requires {label}")
                if not Path(p).exists():
                    raise ConfigError(f"{label}: no such file {p}")

    def echo(self) -> dict[str, object]:
        """Flat key -> value view of every setting, for the run manifest."""
        t = self.gan.train
        out: dict[str, object] = {
            "experiment": self.kind,
            "out": self.out,
            "seed": self.seed,
            "seeds": self.seeds,
            "data.kind": self.data.kind,
            "data.n": self.data.n,
            "data.dim": self.data.dim,
            "data.components": self.data.components,
            "data.radius": self.data.radius,
            "data.sigma": self.data.sigma,
            "data.separation": self.data.separation,
            "gan.latent_dim": self.gan.latent_dim,
            "gan.gen_hidden": ",".join(map(str, self.gan.gen_hidden)),
            "gan.disc_hidden": ",".join(map(str, self.gan.disc_hidden)),
            "gan.iterations": self.gan.total_iterations,
            "gan.checkpoint_every": self.gan.checkpoint_every,
            "gan.disc_steps": self.gan.disc_steps,
            "gan.learning_rate": t.learning_rate,
            "gan.batch_size": t.batch_size,
            "gan.beta1": t.beta1,
            "gan.beta2": t.beta2,
            "classifier.learning_rate": self.classifier.learning_rate,
            "classifier.batch_size": self.classifier.batch_size,
            "classifier.iterations": self.classifier.iterations,
            "classifier.seed": self.classifier.seed,
            "audit.n_eval": self.audit.n_eval,
            "audit.splits": self.audit.splits,
            "audit.missing_threshold": self.audit.missing_threshold,
            "audit.bins": self.audit.bins,
            "audit.annotator": self.audit.annotator,
            "audit.factors": ",".join(map(str, self.audit.factors)),
            "audit.oversample": self.audit.oversample,
            "audit.holdout_fraction": self.audit.holdout_fraction,
            "audit.synthetic": self.audit.synthetic,
        }
        if self.data.true_path is not None:
            out["data.true_path"] = self.data.true_path
        if self.data.synthetic_path is not None:
            out["data.synthetic_path"] = self.data.synthetic_path
        return out


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def parse_config(text: str, origin: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines into an ordered dict of raw strings."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"{origin}:{lineno}: empty key")
        out[key] = value
    return out


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _parse_ints(key: str, value: str) -> tuple[int, ...]:
    if not value:
        return ()
    return tuple(_parse_int(key, part.strip()) for part in value.split(","))


# key -> (group, field, parser); this registry is the whole schema
_SCHEMA = {
    "experiment": ("top", "kind", str),
    "out": ("top", "out", str),
    "seed": ("top", "seed", _parse_int),
    "seeds": ("top", "seeds", _parse_int),
    "data.kind": ("data", "kind", str),
    "data.n": ("data", "n", _parse_int),
    "data.dim": ("data", "dim", _parse_int),
    "data.components": ("data", "components", _parse_int),
    "data.radius": ("data", "radius", _parse_float),
    "data.sigma": ("data", "sigma", _parse_float),
    "data.separation": ("data", "separation", _parse_float),
    "data.true_path": ("data", "true_path", str),
    "data.synthetic_path": ("data", "synthetic_path", str),
    "gan.latent_dim": ("gan", "latent_dim", _parse_int),
    "gan.gen_hidden": ("gan", "gen_hidden", _parse_ints),
    "gan.disc_hidden": ("gan", "disc_hidden", _parse_ints),
    "gan.iterations": ("gan", "total_iterations", _parse_int),
    "gan.checkpoint_every": ("gan", "checkpoint_every", _parse_int),
    "gan.disc_steps": ("gan", "disc_steps", _parse_int),
    "gan.learning_rate": ("gan.train", "learning_rate", _parse_float),
    "gan.batch_size": ("gan.train", "batch_size", _parse_int),
    "gan.beta1": ("gan.train", "beta1", _parse_float),
    "gan.beta2": ("gan.train", "beta2", _parse_float),
    "classifier.learning_rate": ("classifier", "learning_rate", _parse_float),
    "classifier.batch_size": ("classifier", "batch_size", _parse_int),
    "classifier.iterations": ("classifier", "iterations", _parse_int),
    "classifier.seed": ("classifier", "seed", _parse_int),
    "audit.n_eval": ("audit", "n_eval", _parse_int),
    "audit.splits": ("audit", "splits", _parse_int),
    "audit.missing_threshold": ("audit", "missing_threshold", _parse_float),
    "audit.bins": ("audit", "bins", _parse_int),
    "audit.annotator": ("audit", "annotator", str),
    "audit.factors": ("audit", "factors", _parse_ints),
    "audit.oversample": ("audit", "oversample", _parse_int),
    "audit.holdout_fraction": ("audit", "holdout_fraction", _parse_float),
    "audit.synthetic": ("audit", "synthetic", str),
}


def build_experiment_config(entries: dict[str, str]) -> ExperimentConfig:
    """Turn raw key/value strings into a validated ExperimentConfig."""
    groups: dict[str, dict[str, object]] = {
        "top": {},
        "data": {},
        "gan": {},
        "gan.train": {},
        "classifier": {},
        "audit": {},
    }
    for key, raw in entries.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        group, fname, parser = _SCHEMA[key]
        groups[group][fname] = parser(key, raw) if parser is not str else raw

    if "kind" not in groups["top"]:
        raise ConfigError("config must set experiment = <kind>")
    if "out" not in groups["top"]:
        raise ConfigError("config must set out = <directory>")

    gan = GanConfig(**groups["gan"])
    if groups["gan.train"]:
        gan = replace(gan, train=replace(gan.train, **groups["gan.train"]))
    return ExperimentConfig(
        data=DataSpec(**groups["data"]),
        gan=gan,
        classifier=TrainConfig(**groups["classifier"]),
        audit=AuditSpec(**groups["audit"]),
        **groups["top"],
    )


def load_experiment_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Read a config file and apply flag overrides on top."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    entries = parse_config(text, origin=str(path))
    for key, value in (overrides or {}).items():
        entries[key] = value
    return build_experiment_config(entries)
