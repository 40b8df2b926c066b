"""Operational surface: persistence, config files, experiment pipelines,
SVG plots, and the command-line entry point.
"""

from .config import ExperimentConfig, load_experiment_config, parse_config
from .dataio import load_checkpoint, load_dataset, save_checkpoint, save_dataset, write_csv
from .experiments import ReportBundle, run_experiment
from .svgplot import bar_plot, line_plot

__all__ = [
    "ExperimentConfig",
    "parse_config",
    "load_experiment_config",
    "save_dataset",
    "load_dataset",
    "save_checkpoint",
    "load_checkpoint",
    "write_csv",
    "ReportBundle",
    "run_experiment",
    "line_plot",
    "bar_plot",
]
