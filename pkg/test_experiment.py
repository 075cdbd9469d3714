"""
Tests for experiment orchestration, result files, presets, views and the CLI.
"""

import asyncio
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import config
import experiment
import lab
from engine.bandit import TieRule
from engine.errors import ConfigInvalid
from experiment import ExperimentConfig, execute_async, run_experiment, sensitivity_sweep
from labels import get_label
from results import ResultStore
from views.svg_views import render_curves_svg
from views.table_views import format_summary, format_sweep

SVG_NS = "{http://www.w3.org/2000/svg}"


def _seq_data(out, **overrides):
    data = {
        "kind": "sequential",
        "name": "tiny",
        "scenarios": [{"name": "tiny", "s0": 2, "d": 10, "T": 40}],
        "methods": [
            {"label": "opt_lasso(0.8,0.6)", "estimator": "opt_lasso", "C0": 0.8, "C0_hard": 0.6},
            {"label": "lasso(0.8)", "estimator": "lasso", "C0": 0.8},
        ],
        "reps": 3,
        "seed": 11,
        "parallel_jobs": 1,
        "output_dir": str(out),
    }
    data.update(overrides)
    return data


def _bandit_data(out, **overrides):
    data = {
        "kind": "bandit",
        "name": "tiny-bandit",
        "scenarios": [{"name": "tiny", "K": 2, "s0": 2, "d": 10, "T": 60,
                       "gamma1": 10, "gamma2": 30, "g1": 10, "g2": 10}],
        "methods": [{"policy": "oracle"}, {"policy": "three_stage"}],
        "reps": 2,
        "seed": 5,
        "parallel_jobs": 1,
        "output_dir": str(out),
    }
    data.update(overrides)
    return data


# ── config validation ─────────────────────────────────────────────────────────

@pytest.mark.parametrize("overrides, field", [
    ({"kind": "bogus"}, "kind"),
    ({"reps": 1}, "reps"),
    ({"parallel_jobs": 0}, "parallel_jobs"),
    ({"seed": -1}, "seed"),
    ({"curve_until": 0.0}, "curve_until"),
    ({"scenarios": []}, "scenarios"),
    ({"plot": ["cum_regret"]}, "plot"),
    ({"scenarios": [{"s0": 20, "d": 10, "T": 40}]}, "scenarios[0] / methods[0]"),
])
def test_config_invalid_names_field(tmp_path, overrides, field):
    with pytest.raises(ConfigInvalid) as info:
        ExperimentConfig.from_dict(_seq_data(tmp_path, **overrides))
    assert info.value.field == field


def test_config_rejects_unknown_field(tmp_path):
    with pytest.raises(ConfigInvalid) as info:
        ExperimentConfig.from_dict(_seq_data(tmp_path, horizon=10))
    assert info.value.field == "horizon"


def test_config_rejects_unknown_policy(tmp_path):
    with pytest.raises(ConfigInvalid) as info:
        ExperimentConfig.from_dict(_bandit_data(tmp_path, methods=[{"policy": "ucb"}]))
    assert info.value.field == "methods[0].policy"


def test_fixture_config_needs_name(tmp_path):
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.from_dict({"kind": "fixtures", "fixture": {"name": "spheres"}})


def test_to_dict_round_trips(tmp_path):
    cfg = ExperimentConfig.from_dict(_seq_data(tmp_path))
    assert ExperimentConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


# ── determinism and outputs ───────────────────────────────────────────────────

def test_tiny_run_is_deterministic(tmp_path):
    first = run_experiment(ExperimentConfig.from_dict(_seq_data(tmp_path / "a")))
    second = run_experiment(ExperimentConfig.from_dict(_seq_data(tmp_path / "b")))
    for name in ("table.csv", "curves.csv"):
        assert (first.parent / name).read_bytes() == (second.parent / name).read_bytes()


def test_worker_count_does_not_change_results(tmp_path):
    serial = run_experiment(ExperimentConfig.from_dict(_seq_data(tmp_path / "one")))
    pooled = run_experiment(ExperimentConfig.from_dict(_seq_data(tmp_path / "two", parallel_jobs=2)))
    assert (serial.parent / "table.csv").read_bytes() == (pooled.parent / "table.csv").read_bytes()
    assert (serial.parent / "curves.csv").read_bytes() == (pooled.parent / "curves.csv").read_bytes()


def test_manifest_reruns_to_same_table(tmp_path):
    manifest_path = run_experiment(ExperimentConfig.from_dict(_seq_data(tmp_path / "orig")))
    manifest = ResultStore.read_manifest(manifest_path)
    assert manifest["seed"] == 11
    assert {"config", "version", "started_at", "wall_time_s"} <= set(manifest)

    manifest["config"]["output_dir"] = str(tmp_path / "rerun")
    rerun = run_experiment(ExperimentConfig.from_dict(manifest))
    assert (manifest_path.parent / "table.csv").read_bytes() == (rerun.parent / "table.csv").read_bytes()


def test_table_rows(tmp_path):
    manifest_path = run_experiment(ExperimentConfig.from_dict(_seq_data(tmp_path)))
    rows = ResultStore.read_table(manifest_path.parent / "table.csv")
    header = (manifest_path.parent / "table.csv").read_text().splitlines()[0]
    assert header == "scenario,method,metric,mean,sem,sd,reps,seed"
    methods = {r.method for r in rows}
    assert methods == {"opt_lasso(0.8,0.6)", "lasso(0.8)"}
    assert {r.metric for r in rows} == {"cum_error", "fp_T", "fn_T", "not_converged"}
    assert all(r.reps == 3 and r.seed == 11 for r in rows)


def test_curves_start_at_window(tmp_path):
    manifest_path = run_experiment(ExperimentConfig.from_dict(_seq_data(tmp_path)))
    curves = ResultStore.read_curves(manifest_path.parent / "curves.csv")
    ts, values = curves[("tiny", "lasso(0.8)", "running_error")]
    assert ts[0] == 4 and ts[-1] == 40
    assert all(b >= a for a, b in zip(values, values[1:]))
    ts, _ = curves[("tiny", "lasso(0.8)", "fp")]
    assert ts == list(range(1, 41))


def test_bandit_oracle_has_zero_regret(tmp_path):
    manifest_path = run_experiment(ExperimentConfig.from_dict(_bandit_data(tmp_path)))
    rows = ResultStore.read_table(manifest_path.parent / "table.csv")
    oracle = {r.metric: r for r in rows if r.method == "oracle"}
    assert oracle["cum_regret"].mean == 0.0
    assert oracle["cum_regret"].sem == 0.0
    three_stage = {r.metric: r for r in rows if r.method == "three_stage"}
    assert three_stage["cum_regret"].mean >= three_stage["regret_from_gamma2"].mean >= 0.0


def test_failed_job_leaves_no_table(tmp_path, monkeypatch):
    def boom(job):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr(experiment, "run_job", boom)
    out = tmp_path / "failed"
    with pytest.raises(RuntimeError):
        run_experiment(ExperimentConfig.from_dict(_seq_data(out)))
    assert not (out / "table.csv").exists()
    assert not (out / "manifest.json").exists()
    assert not any(p.name.startswith(".staging") for p in out.iterdir())


# ── sweeps ────────────────────────────────────────────────────────────────────

def test_single_cell_sweep_matches_direct_run(tmp_path):
    base = ExperimentConfig.from_dict(_seq_data(tmp_path / "sweep", methods=[]))
    (table,) = sensitivity_sweep([0.8], [0.6], base, write=False)
    cell = table.cells[0][0]
    assert table.min_cell == (0, 0)

    direct = asyncio.run(execute_async(ExperimentConfig.from_dict(_seq_data(tmp_path / "direct"))))
    row = next(r for r in direct.rows if r.method == "opt_lasso(0.8,0.6)" and r.metric == "cum_error")
    assert cell.mean == row.mean and cell.sem == row.sem


def test_sweep_flags_argmin_and_writes(tmp_path):
    base = ExperimentConfig.from_dict(_seq_data(tmp_path / "grid", methods=[]))
    (table,) = sensitivity_sweep([0.4, 1.2], [0.2, 0.8], base)
    means = [[table.cells[i][j].mean for j in range(2)] for i in range(2)]
    a, b = table.min_cell
    assert means[a][b] == min(min(row) for row in means)

    lines = (tmp_path / "grid" / "sweep.csv").read_text().splitlines()
    assert lines[0] == "scenario,metric,c0,c0_hard,mean,sem,sd,reps,is_min"
    assert sum(line.endswith(",1") for line in lines[1:]) == 1
    assert "*" in format_sweep(table)


def test_sweep_cells_are_reproducible(tmp_path):
    base = ExperimentConfig.from_dict(_seq_data(tmp_path / "again", methods=[]))
    (first,) = sensitivity_sweep([0.8, 1.0], [0.6], base, write=False)
    (second,) = sensitivity_sweep([0.8, 1.0], [0.6], base, write=False)
    assert [c[0].mean for c in first.cells] == [c[0].mean for c in second.cells]
    assert first.min_cell == second.min_cell


def test_sweep_needs_grid(tmp_path):
    base = ExperimentConfig.from_dict(_seq_data(tmp_path))
    with pytest.raises(ConfigInvalid):
        experiment.sweep_config([], [0.6], base)


# ── presets ───────────────────────────────────────────────────────────────────

def test_table_preset_subset():
    data = config.get_table_preset("table1", reps=4, T=300, seed=9, scenarios=["a", "seq-c"])
    assert data["kind"] == "sequential" and data["reps"] == 4 and data["seed"] == 9
    assert data["scenarios"] == [{"preset": "seq-a", "T": 300}, {"preset": "seq-c", "T": 300}]
    assert [m["label"] for m in data["methods"]] == [
        "opt_lasso(0.8,0.6)", "opt_lasso(1,0.4)", "lasso(0.8)", "lasso(1)",
    ]
    cfg = ExperimentConfig.from_dict(data)
    assert cfg.scenario(0, 0).T == 300 and cfg.scenario(0, 0).d == 100


def test_bandit_preset_tuning_follows_arms():
    assert config.get_bandit_preset("bandit-b").C0_hard == 1.0
    assert config.get_bandit_preset("bandit-a", T=500).T == 500


def test_bandit_presets_break_ties_at_random():
    assert config.get_bandit_preset("bandit-a").tie_rule is TieRule.RANDOM
    assert config.get_bandit_preset("bandit-a", tie_rule="lowest_index").tie_rule is TieRule.LOWEST_INDEX


def test_sweep_preset_methods():
    data = config.get_table_preset("table3", reps=2)
    assert len(data["methods"]) == 25
    assert all("cell" in m for m in data["methods"])


def test_unknown_preset():
    with pytest.raises(ValueError):
        config.get_table_preset("table9")
    with pytest.raises(ValueError):
        config.get_table_preset("table1", scenarios=["z"])


# ── views ─────────────────────────────────────────────────────────────────────

def test_label_keeps_tuning_suffix():
    assert get_label("methods", "opt_lasso(0.8,0.6)") == "OPT-Lasso (0.8,0.6)"
    assert get_label("methods", "mystery") == "mystery"


def test_summary_view(tmp_path):
    manifest_path = run_experiment(ExperimentConfig.from_dict(_seq_data(tmp_path)))
    rows = ResultStore.read_table(manifest_path.parent / "table.csv")
    text = format_summary(rows, "cum_error")
    assert "tiny" in text and "±" in text
    assert format_summary(rows, "cum_regret") == ""


def test_svg_is_well_formed(tmp_path):
    ts = np.arange(1, 11)
    curves = {"lasso": (ts, np.linspace(0.0, 1.0, 10)), "opt_lasso": (ts, np.full(10, 0.5))}
    path = render_curves_svg(curves, tmp_path / "chart.svg", title="demo", y_label="error")
    root = ET.parse(path).getroot()
    polylines = root.findall(f".//{SVG_NS}polyline")
    assert [p.get("data-label") for p in polylines] == ["lasso", "opt_lasso"]
    legend = [t.text for t in root.iter(f"{SVG_NS}text") if t.get("class") == "legend"]
    assert legend == ["Lasso", "OPT-Lasso"]
    meta = json.loads(root.find(f"{SVG_NS}metadata").text)
    assert meta["opt_lasso"]["value"] == [0.5] * 10


def test_svg_constant_series(tmp_path):
    ts = np.arange(1, 4)
    path = render_curves_svg({"oracle": (ts, np.zeros(3))}, tmp_path / "flat.svg")
    assert ET.parse(path).getroot().find(f"{SVG_NS}polyline") is not None


def test_svg_rejects_bad_series(tmp_path):
    with pytest.raises(ValueError):
        render_curves_svg({}, tmp_path / "empty.svg")
    with pytest.raises(ValueError):
        render_curves_svg({"a": ([1, 2], [0.0, 1.0]), "b": ([1, 2, 3], [0.0, 1.0, 2.0])},
                          tmp_path / "ragged.svg")


# ── CLI ───────────────────────────────────────────────────────────────────────

def test_cli_fixture_packing(tmp_path, capsys):
    out = tmp_path / "packing"
    code = asyncio.run(lab.main(["fixtures", "packing", "--d", "7", "--s", "3", "--out", str(out)]))
    assert code == 0
    rows = ResultStore.read_table(out / "table.csv")
    assert rows[0].metric == "M" and rows[0].mean >= 4
    assert (out / "fixture.csv").read_text().startswith("vector,coord,value")
    assert "packing M" in capsys.readouterr().out


def test_cli_fixture_out_of_regime(tmp_path):
    code = asyncio.run(lab.main(["fixtures", "packing", "--d", "10", "--s", "5", "--out", str(tmp_path)]))
    assert code == 2
    assert not (tmp_path / "table.csv").exists()


def test_cli_run_and_plot(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(_seq_data(tmp_path / "run")))
    assert asyncio.run(lab.main(["run", "--config", str(cfg_path)])) == 0

    svg = tmp_path / "fp.svg"
    code = asyncio.run(lab.main([
        "plot", "--curves", str(tmp_path / "run" / "curves.csv"), "--out", str(svg), "--metric", "fp",
    ]))
    assert code == 0
    labels = [p.get("data-label") for p in ET.parse(svg).getroot().iter(f"{SVG_NS}polyline")]
    assert labels == ["opt_lasso(0.8,0.6)", "lasso(0.8)"]


def test_cli_rejects_bad_config(tmp_path):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps(_seq_data(tmp_path / "bad", reps=1)))
    assert asyncio.run(lab.main(["run", "--config", str(cfg_path)])) == 2
