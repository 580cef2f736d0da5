"""
Experiment Runner

Dispatches a validated config to its experiment, writes the report files and
maps row statuses to the process exit code.
"""

import logging
from typing import Any, Dict, List, Sequence

from config import EXIT_ASSERTION, EXIT_OK, EXIT_SOLVER, EXTRAPOLATION_S
from errors import ConfigError
from harness.experiments import (
    EXPERIMENT_RUNNERS,
    STATUS_ERROR,
    STATUS_FAIL,
    STATUS_SOLVER_ERROR,
    ExperimentResult,
)
from harness.reporting import write_csv, write_masks, write_plot_data
from harness.settings import ExperimentConfig
from utils import ensure_directory

logger = logging.getLogger(__name__)


def exit_code(rows: Sequence[Dict[str, Any]]) -> int:
    """3 if any row hit a solver error, else 2 if any assertion failed or a row errored, else 0."""
    statuses = {row.get("status") for row in rows}
    if STATUS_SOLVER_ERROR in statuses:
        return EXIT_SOLVER
    if STATUS_FAIL in statuses or STATUS_ERROR in statuses:
        return EXIT_ASSERTION
    return EXIT_OK


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """
    Run one experiment and write its outputs under cfg.output_dir.

    Returns:
        The ExperimentResult; the report path is logged

    Raises:
        ConfigError: If the experiment is unknown, the config is invalid for it,
            or the output directory or a report file cannot be written
    """
    runner = EXPERIMENT_RUNNERS.get(cfg.experiment)
    if runner is None:
        raise ConfigError(f"No runner for experiment '{cfg.experiment}'")
    if cfg.s >= EXTRAPOLATION_S and cfg.experiment != "counterexample":
        logger.warning(f"s = {cfg.s} lies outside the quantitative regime s < {EXTRAPOLATION_S}; rows are flagged as extrapolation")

    ensure_directory(cfg.output_dir)
    logger.info(f"Running {cfg.experiment} with s={cfg.s}, h={list(cfg.h)}, threads={cfg.threads}")
    result = runner(cfg)
    write_csv(cfg.output_dir, cfg.experiment, result.rows)
    if cfg.plot_data and result.series:
        write_plot_data(cfg.output_dir, cfg.experiment, result.series)
    if result.masks:
        write_masks(cfg.output_dir, result.masks)

    counts: Dict[str, int] = {}
    for row in result.rows:
        counts[row.get("status")] = counts.get(row.get("status"), 0) + 1
    logger.info(f"{cfg.experiment} finished: {counts}")
    return result


def summarize(rows: List[Dict[str, Any]]) -> str:
    """One line per non-passing row, for the console."""
    lines = []
    for row in rows:
        if row.get("status") not in (None, "pass"):
            label = row.get("domain") or row.get("family") or "row"
            detail = f": {row['error']}" if row.get("error") else ""
            lines.append(f"{row['status']:>13}  {label}{detail}")
    return "\n".join(lines)
