"""ganshift: classification-based covariate-shift diagnostics for
generative models on analytically controlled Gaussian testbeds.
"""

from .audit import (
    BoundaryReport,
    BoundaryRow,
    BoundarySkew,
    ModeReport,
    MomentSummary,
    SpectrumReport,
    TemporalModeSeries,
    boundary_distortion_experiment,
    boundary_skew,
    confidence_histogram,
    downsample,
    downsampling_curve,
    gaussian_fit_kl,
    label_correctness,
    mahalanobis_discrepancy,
    mean_discrepancy,
    mode_collapse_experiment,
    mode_histogram,
    modified_inception_score,
    moments,
    spectrum_report,
    temporal_mode_series,
)
from .distributions import (
    BayesAnnotator,
    GaussianSpec,
    LabeledDataset,
    MixtureSpec,
    bayes_posterior,
    distorted_gaussian,
    ring_mixture,
    sample_gaussian,
    sample_mixture,
    stratified_split,
)
from .errors import (
    CheckpointFormatError,
    ConfigError,
    ContractViolation,
    GanshiftError,
    NumericError,
    ValidationError,
)
from .gan import GanConfig, GanRun, VanillaGan, generate, generate_labeled_pair, train_vanilla_gan
from .neural import MlpArch, MlpClassifier, MlpParams, TrainConfig, predict, train_classifier
from .numkit import Rng, SymEig, sym_eig

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Rng",
    "SymEig",
    "sym_eig",
    "GaussianSpec",
    "MixtureSpec",
    "LabeledDataset",
    "BayesAnnotator",
    "sample_gaussian",
    "sample_mixture",
    "bayes_posterior",
    "distorted_gaussian",
    "ring_mixture",
    "stratified_split",
    "MlpArch",
    "MlpParams",
    "MlpClassifier",
    "TrainConfig",
    "predict",
    "train_classifier",
    "GanConfig",
    "GanRun",
    "VanillaGan",
    "generate",
    "generate_labeled_pair",
    "train_vanilla_gan",
    "ModeReport",
    "TemporalModeSeries",
    "MomentSummary",
    "SpectrumReport",
    "BoundaryRow",
    "BoundaryReport",
    "BoundarySkew",
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
    "GanshiftError",
    "ContractViolation",
    "ValidationError",
    "ConfigError",
    "NumericError",
    "CheckpointFormatError",
]
