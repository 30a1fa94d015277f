"""Trace handling, experiment orchestration and reporting."""

from .config import ExperimentConfig, load_config, parse_config
from .experiment import Report, emit_report, read_report, run_experiment
from .traces import Episode, EpisodeList, generate_synthetic, load_traces, write_traces

__all__ = [
    "Episode", "EpisodeList", "ExperimentConfig", "Report", "emit_report", "generate_synthetic",
    "load_config", "load_traces", "parse_config", "read_report", "run_experiment", "write_traces",
]
