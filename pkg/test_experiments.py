"""End-to-end tests for the experiment runners on coarse grids."""

import math

import pytest

from errors import ConfigError, GridError, SolverError
from harness.experiments import (
    STATUS_ERROR,
    STATUS_SOLVER_ERROR,
    _guarded,
    comparison_ball,
    expand_family,
    map_tasks,
    run_counterexample,
    run_eig,
    run_fk_sweep,
    run_hopf,
    run_level_profile,
    run_scaling,
    run_stability,
    run_superlevel,
)
from harness.runner import exit_code, run_experiment
from harness.settings import parse_config


def config(experiment, **data):
    return parse_config(data, experiment)


class TestFamilies:
    def test_ellipse_aspects_keep_area(self):
        members = expand_family({"name": "ellipse_aspects", "aspects": [1.0, 2.0], "area": 2.0})
        for spec, extra in members:
            assert math.pi * spec.params["a"] * spec.params["b"] == pytest.approx(2.0)
            assert spec.params["a"] / spec.params["b"] == pytest.approx(extra["aspect"])

    def test_interval_split(self):
        (single, a), (split, b) = expand_family({"name": "interval_split", "length": 2.0})
        assert a["role"] == "single" and b["role"] == "split"
        total = sum(hi - lo for lo, hi in split.params["intervals"])
        assert total == pytest.approx(2.0)

    def test_aspect_below_one(self):
        with pytest.raises(ConfigError):
            expand_family({"name": "ellipse_aspects", "aspects": [0.5]})

    def test_comparison_ball_measure(self):
        assert comparison_ball(1, 3.0).params["b"] - comparison_ball(1, 3.0).params["a"] == pytest.approx(3.0)
        disk = comparison_ball(2, 2.0, offset=0.25)
        assert math.pi * disk.params["radius"] ** 2 == pytest.approx(2.0)
        assert disk.params["center"] == (0.25, 0.25)


class TestTaskPlumbing:
    def test_order_preserved_with_threads(self):
        cfg = config("eig", threads=3)
        rows = map_tasks(cfg, lambda k: [{"k": k}, {"k": k + 0.5}], list(range(10)))
        assert [row["k"] for row in rows] == [k / 2.0 for k in range(20)]

    def test_failures_become_rows(self):
        def task(item):
            if item == "solver":
                raise SolverError("stalled", last_residual=1e-3, iterations=5)
            raise GridError("bad grid")

        run = _guarded(task, lambda item: {"domain": item})
        solver_row, = run("solver")
        grid_row, = run("grid")
        assert solver_row["status"] == STATUS_SOLVER_ERROR
        assert solver_row["last_residual"] == 1e-3
        assert grid_row["status"] == STATUS_ERROR
        assert exit_code([solver_row, grid_row]) == 3
        assert exit_code([grid_row]) == 2
        assert exit_code([{"status": "pass"}, {"status": "inconclusive"}, {"status": "rejected"}]) == 0


class TestExperiments:
    def test_eig_interval(self):
        cfg = config(
            "eig",
            h=1.0 / 64.0,
            domains=[{"kind": "interval", "a": 0.0, "b": 1.0}],
            params={"shift_cells": [5]},
        )
        row, = run_eig(cfg).rows
        assert row["status"] == "pass"
        assert row["dominance_ok"] and row["shift_identical"]
        assert row["lambda"] > row["lambda_laplacian"] > 9.0

    def test_eig_solver_failure_is_reported(self):
        cfg = config("eig", h=1.0 / 16.0, tol=1e-15, max_iter=1, params={"compare_laplacian": False})
        row, = run_eig(cfg).rows
        assert row["status"] == STATUS_SOLVER_ERROR
        assert exit_code([row]) == 3

    def test_fk_interval_split(self):
        cfg = config("fk-sweep", h=1.0 / 64.0, family={"name": "interval_split", "length": 2.0},
                     params={"chain": False})
        single, split = run_fk_sweep(cfg).rows
        assert split["status"] == "pass" and split["margin"] > 0.0
        assert abs(single["margin"]) <= single["noise_floor"] * 2.0
        assert single["status"] == "inconclusive"
        assert split["order_ok"]

    def test_fk_ellipses(self):
        cfg = config("fk-sweep", h=1.0 / 16.0, family={"name": "ellipse_aspects", "aspects": [1.0, 2.0]},
                     params={"chain": False})
        result = run_fk_sweep(cfg)
        assert all(row["order_ok"] for row in result.rows)
        assert result.rows[1]["status"] == "pass"
        assert all(row["local_ok"] and row["nonlocal_ok"] for row in result.rows)
        assert "lambda_vs_aspect" in result.series

    def test_stability_columns(self):
        cfg = config("stability", h=1.0 / 16.0,
                     family={"name": "perturbed_disks", "amplitudes": [0.0, 0.05], "samples": 256})
        rows = run_stability(cfg).rows
        assert len(rows) == 2
        assert all(row["defects_monotone"] for row in rows)
        assert rows[1]["outer_defect"] > rows[0]["outer_defect"]
        assert all(row["cone_ok"] for row in rows)

    def test_stability_rejects_non_convex(self):
        cfg = config("stability", h=1.0 / 16.0,
                     family={"name": "perturbed_disks", "amplitudes": [0.3], "mode": 4, "samples": 512})
        row, = run_stability(cfg).rows
        assert row["status"] == "rejected"
        assert exit_code([row]) == 0

    def test_superlevel_disk(self):
        cfg = config("superlevel", h=1.0 / 16.0, params={"n_deltas": 6})
        rows = run_superlevel(cfg).rows
        assert len(rows) == 7
        assert rows[-1]["delta"] == 0.0
        assert all(row["bound_ok"] for row in rows)
        assert all(row["status"] == "pass" for row in rows)
        assert rows[0]["convex_below"] is not None

    def test_level_profile(self):
        cfg = config("level-profile", h=1.0 / 16.0, params={"levels": 12})
        result = run_level_profile(cfg)
        levels = [row for row in result.rows if row["row_type"] == "level"]
        summary, = [row for row in result.rows if row["row_type"] == "summary"]
        assert len(levels) == 12
        assert summary["monotone"]
        assert summary["coarea_sum"] > 0.0
        assert "psi_vs_t" in result.series

    def test_scaling(self):
        cfg = config("scaling", h=1.0 / 8.0, params={"factors": [0.5]})
        row, = run_scaling(cfg).rows
        assert row["lower_ok"] and row["upper_ok"]
        assert row["lower"] <= row["lambda_scaled"] <= row["upper"]

    def test_scaling_three_quarters(self):
        cfg = config("scaling", h=1.0 / 8.0, params={"factors": [0.75]})
        row, = run_scaling(cfg).rows
        assert row["h_scaled"] == pytest.approx(3.0 / 32.0)
        assert row["status"] == "pass"
        assert row["lower"] == pytest.approx(0.75 ** (-0.5) * row["lambda"])
        assert row["upper"] == pytest.approx(0.75 ** -2 * row["lambda"])

    def test_scaling_factor_above_one(self):
        cfg = config("scaling", h=1.0 / 8.0, params={"factors": [2.0]})
        row, = run_scaling(cfg).rows
        assert row["lower"] == pytest.approx(0.25 * row["lambda"])
        assert row["upper"] == pytest.approx(2.0 ** -0.5 * row["lambda"])
        assert row["lower"] <= row["lambda_scaled"] <= row["upper"]
        assert row["status"] == "pass"

    @pytest.mark.parametrize("factor", [0.0, -1.0])
    def test_nonpositive_scaling_factor(self, factor):
        with pytest.raises(ConfigError):
            run_scaling(config("scaling", params={"factors": [factor]}))


    def test_counterexample(self):
        cfg = config(
            "counterexample",
            params={
                "hull_deltas": [1e-2, 1e-3, 1e-4],
                "bump_deltas": [1e-2, 1e-3],
                "bonnesen_trials": 20,
                "addi_trials": 20,
            },
        )
        rows = run_counterexample(cfg).rows
        families = {row["family"] for row in rows}
        assert families == {"hull", "bump", "bonnesen_random", "bonnesen_regular", "sandwich"}
        assert exit_code(rows) == 0

    def test_hopf_disk(self):
        cfg = config("hopf", h=1.0 / 16.0, domains=[{"kind": "disk", "radius": 1.0}], params={"samples": 16})
        row, = run_hopf(cfg).rows
        assert row["fraction_negative"] == 1.0
        assert row["status"] == "pass"


class TestRunExperiment:
    def test_writes_outputs(self, tmp_path):
        cfg = parse_config(
            {"params": {"hull_deltas": [1e-2, 1e-3], "bump_deltas": [1e-2], "bonnesen_trials": 5, "addi_trials": 5}},
            "counterexample",
            output_dir=str(tmp_path),
            plot_data=True,
        )
        result = run_experiment(cfg)
        assert (tmp_path / "counterexample.csv").exists()
        assert (tmp_path / "counterexample__hull_defect_vs_eps.csv").exists()
        assert exit_code(result.rows) in (0, 2)

    def test_mask_dump(self, tmp_path):
        cfg = parse_config(
            {"h": 0.125, "domains": [{"kind": "disk", "radius": 1.0}], "params": {"dump_masks": True}},
            "hopf",
            output_dir=str(tmp_path),
        )
        run_experiment(cfg)
        assert list(tmp_path.glob("*.pgm"))

    def test_mask_dump_keeps_repeated_domains(self, tmp_path):
        disk = {"kind": "disk", "radius": 1.0}
        cfg = parse_config(
            {"h": 0.125, "domains": [disk, disk], "params": {"dump_masks": True}},
            "hopf",
            output_dir=str(tmp_path),
        )
        result = run_experiment(cfg)
        assert len(result.masks) == 2
        assert len(list(tmp_path.glob("*.pgm"))) == 2

    def test_unwritable_report_is_a_config_error(self, tmp_path):
        (tmp_path / "hopf.csv").mkdir()
        cfg = parse_config(
            {"h": 0.125, "domains": [{"kind": "disk", "radius": 1.0}], "params": {"samples": 8}},
            "hopf",
            output_dir=str(tmp_path),
        )
        with pytest.raises(ConfigError):
            run_experiment(cfg)
