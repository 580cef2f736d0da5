"""Tests for the command-line entry point and its exit codes."""

import json

import pytest

from app import build_parser, main
from config import EXIT_CONFIG, EXIT_OK, EXPERIMENTS


def write_config(tmp_path, data):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_every_experiment_has_a_subcommand():
    parser = build_parser()
    for name in EXPERIMENTS:
        args = parser.parse_args([name, "--threads", "2"])
        assert args.experiment == name
        assert args.threads == 2
        assert args.plot_data is None


def test_unknown_subcommand_exits():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["sweep"])


def test_counterexample_run(tmp_path):
    path = write_config(tmp_path, {
        "experiment": "counterexample",
        "params": {"hull_deltas": [1e-2, 1e-3, 1e-4], "bump_deltas": [1e-2, 1e-3],
                   "bonnesen_trials": 10, "addi_trials": 10},
    })
    out = tmp_path / "results"
    code = main(["counterexample", "--config", path, "--out", str(out), "--plot-data"])
    assert code == EXIT_OK
    report = (out / "counterexample.csv").read_text().splitlines()
    assert report[0].startswith("# schema=counterexample/")
    assert report[2].startswith("family,")


def test_unknown_key_is_a_config_error(tmp_path):
    path = write_config(tmp_path, {"experiment": "eig", "spacing": 0.1})
    assert main(["eig", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["eig", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG


def test_config_for_another_experiment(tmp_path):
    path = write_config(tmp_path, {"experiment": "hopf"})
    assert main(["scaling", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_invalid_scaling_factor(tmp_path):
    path = write_config(tmp_path, {"experiment": "scaling", "params": {"factors": [0.0]}})
    assert main(["scaling", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unknown_param_is_a_config_error(tmp_path):
    path = write_config(tmp_path, {"experiment": "scaling", "params": {"factorz": [0.75]}})
    assert main(["scaling", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_output_path_is_a_file(tmp_path):
    taken = tmp_path / "taken"
    taken.write_text("x")
    path = write_config(tmp_path, {"experiment": "hopf"})
    assert main(["hopf", "--config", path, "--out", str(taken)]) == EXIT_CONFIG


def test_report_path_is_a_directory(tmp_path):
    (tmp_path / "counterexample.csv").mkdir()
    path = write_config(tmp_path, {
        "experiment": "counterexample",
        "params": {"hull_deltas": [1e-2, 1e-3], "bump_deltas": [1e-2], "bonnesen_trials": 5, "addi_trials": 5},
    })
    assert main(["counterexample", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG
