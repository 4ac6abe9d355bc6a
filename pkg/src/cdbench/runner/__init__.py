"""Experiment configuration, matrix execution and reporting."""

from cdbench.runner.config import ConfigErrors, load_config, validate_config
from cdbench.runner.matrix import run_matrix
from cdbench.runner.report import ExperimentReport, emit_report

__all__ = ["ConfigErrors", "ExperimentReport", "emit_report", "load_config", "run_matrix", "validate_config"]
