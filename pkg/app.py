"""
Mixed Operator Lab - Main Application

A command-line laboratory for the principal Dirichlet eigenvalue of the mixed
operator -Laplacian + (-Laplacian)^s on bounded domains in 1D and 2D.
This is the main entry point that dispatches every experiment.

Features:
- Principal eigenpairs on rasterized domains (eig)
- Faber-Krahn sweeps against equal-measure balls with Polya-Szego checks (fk-sweep)
- Eigenvalue excess versus inner/outer ball defects (stability)
- Superlevel-set measure bounds and convexity (superlevel)
- Level profiles and the isoperimetric gap integral (level-profile)
- Scaling bounds under dilations (scaling)
- Sandwich exponent counterexamples and the Bonnesen suite (counterexample)
- Boundary sign of the normal derivative (hopf)

Dependencies:
- numpy>=1.24
- scipy>=1.12
- scikit-image>=0.22
- pytz>=2023.3

Usage:
    python app.py fk-sweep --config configs/fk_sweep.json --out results --threads 4

Exit codes: 0 all rows pass or are inconclusive, 2 a hard assertion failed,
3 the eigen solver failed, 64 invalid configuration.
"""

import argparse
import logging
import sys
from typing import List, Optional

from config import EXIT_CONFIG, EXPERIMENTS
from errors import ConfigError
from harness.runner import exit_code, run_experiment, summarize
from harness.settings import load_config, parse_config

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixed-operator-lab",
        description="Numerical experiments for the mixed local/nonlocal Dirichlet eigenvalue problem",
    )
    subparsers = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sub = subparsers.add_parser(name, help=f"Run the {name} experiment")
        sub.add_argument("--config", help="Path to a JSON experiment config")
        sub.add_argument("--out", dest="output_dir", help="Output directory (overrides output_dir)")
        sub.add_argument("--threads", type=int, help="Worker threads for independent rows")
        sub.add_argument("--plot-data", action="store_true", default=None, help="Also write two-column plot series")
        sub.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    overrides = {"output_dir": args.output_dir, "threads": args.threads, "plot_data": args.plot_data}
    try:
        if args.config:
            cfg = load_config(args.config, args.experiment, **overrides)
        else:
            cfg = parse_config({}, args.experiment, **overrides)
        result = run_experiment(cfg)
    except ConfigError as e:
        logger.error(f"Configuration error: {str(e)}")
        return EXIT_CONFIG

    report = summarize(result.rows)
    if report:
        print(report)
    return exit_code(result.rows)


if __name__ == "__main__":
    sys.exit(main())
