"""
Reporting

CSV output for experiment rows, two-column plot series, and mask dumps.
"""

import csv
import io
import logging
import os
from typing import Any, Dict, List, Sequence, Tuple

from config import SCHEMA_VERSIONS
from errors import ConfigError
from utils import ensure_directory, save_text_file, utc_timestamp

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """Render one cell: repr for floats, lower-case booleans, empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def collect_columns(rows: Sequence[Dict[str, Any]]) -> List[str]:
    """Union of row keys in first-seen order."""
    columns: List[str] = []
    seen = set()
    for row in rows:
        for key in row:
            if key not in seen:
                seen.add(key)
                columns.append(key)
    return columns


def render_csv(experiment: str, rows: Sequence[Dict[str, Any]], timestamp: str) -> str:
    """CSV text with the schema and timestamp header lines."""
    buffer = io.StringIO()
    buffer.write(f"# schema={experiment}/{SCHEMA_VERSIONS[experiment]}\n")
    buffer.write(f"# generated={timestamp}\n")
    columns = collect_columns(rows)
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(column)) for column in columns])
    return buffer.getvalue()


def _save(path: str, text: str):
    if not save_text_file(path, text):
        raise ConfigError(f"Could not write output file {path}")


def write_csv(out_dir: str, experiment: str, rows: Sequence[Dict[str, Any]]) -> str:
    """
    Write <out_dir>/<experiment>.csv and return its path.

    Raises:
        ConfigError: If the directory or the file cannot be written
    """
    ensure_directory(out_dir)
    path = os.path.join(out_dir, f"{experiment}.csv")
    _save(path, render_csv(experiment, rows, utc_timestamp()))
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def write_plot_data(out_dir: str, experiment: str, series: Dict[str, Tuple[Tuple[str, str], List[Tuple[float, float]]]]) -> List[str]:
    """
    Write one two-column CSV per series as <experiment>__<series>.csv.

    Args:
        series: name -> ((x label, y label), [(x, y), ...])
    """
    ensure_directory(out_dir)
    paths = []
    for name, (labels, points) in series.items():
        path = os.path.join(out_dir, f"{experiment}__{name}.csv")
        lines = [",".join(labels)] + [f"{format_value(float(x))},{format_value(float(y))}" for x, y in points]
        _save(path, "\n".join(lines) + "\n")
        paths.append(path)
    logger.info(f"Wrote {len(paths)} plot series for {experiment}")
    return paths


def write_masks(out_dir: str, masks: Dict[str, str]) -> List[str]:
    """Write PGM mask dumps, one file per name."""
    ensure_directory(out_dir)
    paths = []
    for name, text in masks.items():
        path = os.path.join(out_dir, f"{name}.pgm")
        _save(path, text)
        paths.append(path)
    return paths
