"""
Experiment Settings

JSON configuration ingestion: the ExperimentConfig dataclass, validation of
every key, and CLI overrides.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Mapping, Optional, Tuple

from config import (
    DEFAULT_MAX_ITER,
    DEFAULT_S,
    DEFAULT_SCALES,
    DEFAULT_THREADS,
    DEFAULT_TOL,
    EXPERIMENTS,
    NOISE_FLOOR_FACTOR,
    POLYA_SZEGO_SLACK,
    SCALING_SLACK,
)
from errors import ConfigError, GridError
from numerics.gridcore import ShapeSpec
from utils import check_writable, load_json_file

logger = logging.getLogger(__name__)

CONFIG_KEYS = {
    "experiment",
    "s",
    "h",
    "scales",
    "tol",
    "max_iter",
    "slack",
    "domains",
    "family",
    "params",
    "threads",
    "output_dir",
    "plot_data",
}

SLACK_KEYS = {"polya_szego", "scaling", "noise_floor_factor"}

# Parametric domain families and their accepted parameters
FAMILIES = {
    "ellipse_aspects": {"aspects", "area"},
    "perturbed_disks": {"amplitudes", "mode", "samples", "radius"},
    "interval_split": {"length"},
}

# Keys each experiment reads from "params"
EXPERIMENT_PARAMS = {
    "eig": {"compare_laplacian", "shift_cells", "dump_masks"},
    "fk-sweep": {"chain", "polya_szego", "dump_masks"},
    "stability": {"dump_masks"},
    "superlevel": {"eps", "deltas", "max_delta", "n_deltas", "dump_masks"},
    "level-profile": {"levels", "eps", "dump_masks"},
    "scaling": {"factors"},
    "counterexample": {
        "hull_deltas",
        "bump_deltas",
        "arc_vertices",
        "bump_samples",
        "seed",
        "bonnesen_trials",
        "addi_trials",
    },
    "hopf": {"samples", "dump_masks"},
}

DEFAULT_OUTPUT_DIR = "results"


@dataclass(frozen=True)
class SlackConfig:
    polya_szego: float = POLYA_SZEGO_SLACK
    scaling: float = SCALING_SLACK
    noise_floor_factor: float = NOISE_FLOOR_FACTOR


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated experiment configuration.

    Attributes:
        experiment: CLI subcommand name
        s: Fractional exponent in (0, 1)
        h: Grid spacings to run, all positive
        scales: (local_scale, nonlocal_scale)
        tol: Eigen solver residual tolerance
        max_iter: Eigen solver iteration cap
        slack: Relative slacks for the soft comparisons
        domains: Explicit domain list
        family: Parametric family {"name": ..., <parameters>} or None
        params: Experiment-specific parameters
        threads: Worker threads for independent rows
        output_dir: Directory receiving CSV output
        plot_data: Also write two-column plot series
    """

    experiment: str
    s: float = DEFAULT_S
    h: Tuple[float, ...] = (1.0 / 64.0,)
    scales: Tuple[float, float] = DEFAULT_SCALES
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    slack: SlackConfig = field(default_factory=SlackConfig)
    domains: Tuple[ShapeSpec, ...] = ()
    family: Optional[Dict[str, Any]] = None
    params: Dict[str, Any] = field(default_factory=dict)
    threads: int = DEFAULT_THREADS
    output_dir: str = DEFAULT_OUTPUT_DIR
    plot_data: bool = False

    def param(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {value!r}")
    return float(value)


def _parse_slack(data: Any) -> SlackConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("'slack' must be an object")
    unknown = set(data) - SLACK_KEYS
    if unknown:
        raise ConfigError(f"Unknown slack keys: {sorted(unknown)}")
    values = {key: _number(value, f"slack.{key}") for key, value in data.items()}
    for key, value in values.items():
        if value < 0:
            raise ConfigError(f"slack.{key} must be nonnegative, got {value}")
    return SlackConfig(**values)


def _parse_family(data: Any) -> Dict[str, Any]:
    if not isinstance(data, Mapping) or "name" not in data:
        raise ConfigError("'family' must be an object with a 'name'")
    name = data["name"]
    if name not in FAMILIES:
        raise ConfigError(f"Unknown family '{name}'; expected one of {sorted(FAMILIES)}")
    unknown = set(data) - FAMILIES[name] - {"name"}
    if unknown:
        raise ConfigError(f"Unknown keys for family '{name}': {sorted(unknown)}")
    return dict(data)


def parse_config(data: Mapping[str, Any], experiment: Optional[str] = None, **overrides: Any) -> ExperimentConfig:
    """
    Validate a raw JSON object into an ExperimentConfig.

    Args:
        data: Parsed JSON object
        experiment: Subcommand name; must agree with data["experiment"] when both are given
        **overrides: CLI values (output_dir, threads, plot_data); None values are ignored

    Raises:
        ConfigError: On unknown keys, invalid values, or an output directory that cannot be written
    """
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"Unknown config keys: {sorted(unknown)}")

    name = experiment or data.get("experiment")
    if data.get("experiment") not in (None, name):
        raise ConfigError(f"Config is for '{data['experiment']}' but '{experiment}' was requested")
    if name not in EXPERIMENTS:
        raise ConfigError(f"Unknown experiment '{name}'; expected one of {list(EXPERIMENTS)}")

    kwargs: Dict[str, Any] = {"experiment": name}
    if "s" in data:
        s = _number(data["s"], "s")
        if not 0.0 < s < 1.0:
            raise ConfigError(f"'s' must lie in (0, 1), got {s}")
        kwargs["s"] = s
    if "h" in data:
        raw = data["h"] if isinstance(data["h"], list) else [data["h"]]
        spacings = tuple(_number(v, "h") for v in raw)
        if not spacings or any(v <= 0 for v in spacings):
            raise ConfigError(f"'h' must be positive, got {data['h']!r}")
        kwargs["h"] = spacings
    if "scales" in data:
        scales = data["scales"]
        if not isinstance(scales, list) or len(scales) != 2:
            raise ConfigError("'scales' must be [local, nonlocal]")
        local, nonlocal_ = (_number(v, "scales") for v in scales)
        if local < 0 or nonlocal_ < 0:
            raise ConfigError(f"'scales' must be nonnegative, got {scales}")
        kwargs["scales"] = (local, nonlocal_)
    if "tol" in data:
        tol = _number(data["tol"], "tol")
        if tol <= 0:
            raise ConfigError(f"'tol' must be positive, got {tol}")
        kwargs["tol"] = tol
    if "max_iter" in data:
        if not isinstance(data["max_iter"], int) or data["max_iter"] < 1:
            raise ConfigError(f"'max_iter' must be a positive integer, got {data['max_iter']!r}")
        kwargs["max_iter"] = data["max_iter"]
    if "slack" in data:
        kwargs["slack"] = _parse_slack(data["slack"])
    if "domains" in data:
        if not isinstance(data["domains"], list):
            raise ConfigError("'domains' must be a list of shape objects")
        try:
            kwargs["domains"] = tuple(ShapeSpec.from_dict(item) for item in data["domains"])
        except (GridError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid domain: {str(e)}") from e
    if "family" in data:
        kwargs["family"] = _parse_family(data["family"])
    if "params" in data:
        if not isinstance(data["params"], Mapping):
            raise ConfigError("'params' must be an object")
        unknown = set(data["params"]) - EXPERIMENT_PARAMS[name]
        if unknown:
            raise ConfigError(f"Unknown params for '{name}': {sorted(unknown)}")
        kwargs["params"] = dict(data["params"])
    if "threads" in data:
        kwargs["threads"] = data["threads"]
    if "output_dir" in data:
        if not isinstance(data["output_dir"], str):
            raise ConfigError("'output_dir' must be a string")
        kwargs["output_dir"] = data["output_dir"]
    if "plot_data" in data:
        kwargs["plot_data"] = bool(data["plot_data"])

    cfg = ExperimentConfig(**kwargs)
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    if not isinstance(cfg.threads, int) or cfg.threads < 1:
        raise ConfigError(f"'threads' must be a positive integer, got {cfg.threads!r}")
    check_writable(cfg.output_dir)
    return cfg


def load_config(path: str, experiment: Optional[str] = None, **overrides: Any) -> ExperimentConfig:
    """Load and validate a JSON config file."""
    cfg = parse_config(load_json_file(path), experiment, **overrides)
    logger.info(f"Loaded config {path} for experiment '{cfg.experiment}'")
    return cfg
