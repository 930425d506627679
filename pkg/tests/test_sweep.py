from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

from config_loader import CONFIG_ENV, ConfigError, load_config, resolve_runtime_options
from conftest import sampled
from pipelines.common.checksum import sha256_file
from pipelines.sweep.runner import RunRecord, aggregate, run_sweep
from pipelines.sweep.spec import ExperimentConfig, load_experiment
from pipelines.sweep.table import COLUMNS, SweepTable, emit_csv, parse_csv, render_csv
from run_experiments import main
from system_model import instance_to_json


def _tiny_config(**changes):
    data = {
        "sweep": {"variable": "D0", "grid": [1e5]},
        "schemes": ["S2FL"],
        "realizations": 1,
        "seed_base": 5,
        "output_path": "results.csv",
        "system": {"num_devices": 2},
        "solver": {"max_iter": 3},
    }
    data.update(changes)
    return data


def _write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


@pytest.fixture(autouse=True)
def _no_config_env(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)


@pytest.mark.parametrize(
    "changes",
    [
        dict(sweep={"variable": "Pmax", "grid": [1.0]}),
        dict(sweep={"variable": "D0", "grid": []}),
        dict(sweep={"variable": "D0", "grid": [1e5, 2e5, 1.5e5]}),
        dict(sweep={"variable": "N", "grid": [2.5]}),
        dict(sweep={"variable": "eps0", "grid": [0.5, 2.0]}),
        dict(schemes=["S2FL", "GLA"]),
        dict(schemes=["FTD", "FTD"]),
        dict(schemes=[]),
        dict(mode="ofdma"),
        dict(realizations=0),
        dict(seed_base=-1),
        dict(extra=True),
        dict(solver={"max_iter": 0}),
        dict(solver={"step": 1}),
        dict(solver={"mu": 1.0}),
        dict(learning={"eps0": 0.0}),
        dict(system={"num_devices": 2, "bogus": 1}),
    ],
)
def test_invalid_configs_are_rejected(changes):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping(_tiny_config(**changes))


def test_config_paths_resolve_next_to_the_file(tmp_path):
    path = _write_config(tmp_path, _tiny_config())
    loaded = load_config(str(path))
    assert loaded["output_path"] == str(tmp_path / "results.csv")
    overridden = resolve_runtime_options(config_path=str(path), output_path=str(tmp_path / "o.csv"), mode="noma")
    assert overridden["mode"] == "noma"
    with pytest.raises(ConfigError):
        resolve_runtime_options(config_path=str(path), workers=0)


def test_config_env_variable_is_honored(tmp_path, monkeypatch):
    path = _write_config(tmp_path, _tiny_config(), name="other.json")
    monkeypatch.setenv(CONFIG_ENV, str(path))
    assert load_experiment().output_path == tmp_path / "results.csv"


def test_malformed_json_is_a_config_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(path))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))


def test_interior_point_overrides():
    config = ExperimentConfig.from_mapping(_tiny_config(solver={"tol": 1e-7, "mu": 20, "interior_max_iter": 50}))
    settings = config.options.settings()
    assert (settings.tol, settings.mu, settings.max_iter) == (1e-7, 20, 50)
    assert ExperimentConfig.from_mapping(_tiny_config()).options.settings().mu == 10.0


def test_noma_mode_only_changes_the_joint_scheme():
    config = ExperimentConfig.from_mapping(_tiny_config(mode="noma", schemes=["S2FL", "EBA"]))
    assert config.scheme("S2FL").tag == "S2FL-NOMA"
    assert config.scheme("EBA").mode == "fdma"
    assert config.seed(3) == 8


def test_sweep_value_is_applied():
    config = ExperimentConfig.from_mapping(_tiny_config(sweep={"variable": "P0_dBm", "grid": [30.0, 40.0]}))
    system, _, _ = config.at(30.0)
    assert system.power_budget == pytest.approx(1.0)
    config = ExperimentConfig.from_mapping(_tiny_config(sweep={"variable": "Na", "grid": [2, 8]}))
    assert config.at(8)[2].antennas == 8


def test_single_cell_sweep_writes_one_row(tmp_path):
    config = ExperimentConfig.from_mapping(_tiny_config(output_path=str(tmp_path / "out.csv")))
    seen = []
    table, records = run_sweep(config, on_record=seen.append)
    assert len(records) == len(seen) == 1
    assert len(table.rows) == 1
    row = table.rows[0]
    assert (row.sweep_value, row.scheme) == (1e5, "S2FL")
    assert (row.n_ok, row.n_fail) == (1, 0)
    assert records[0].ok
    assert row.std_T == 0.0
    assert row.mean_T == records[0].objective

    assert emit_csv(table, config.output_path)
    first = sha256_file(config.output_path)
    rerun, _ = run_sweep(config)
    assert not emit_csv(rerun, config.output_path)
    assert sha256_file(config.output_path) == first

    text = config.output_path.read_text(encoding="utf-8")
    assert text.startswith("# sweep_variable=D0\n")
    assert ",".join(COLUMNS) in text
    parsed = parse_csv(text)
    assert parsed.header == table.header
    assert render_csv(parsed) == text


def test_aggregate_counts_failures():
    config = ExperimentConfig.from_mapping(_tiny_config(realizations=3))
    records = [
        RunRecord(1e5, "S2FL", 0, 5, "ok", objective=2.0, iterations=4),
        RunRecord(1e5, "S2FL", 1, 6, "failed", error="SubproblemError: boom"),
        RunRecord(1e5, "S2FL", 2, 7, "ok", objective=4.0, iterations=6),
    ]
    row = aggregate(config, records).rows[0]
    assert (row.n_ok, row.n_fail) == (2, 1)
    assert row.mean_T == 3.0
    assert row.std_T == 1.0
    assert row.mean_iters == 5.0

    all_failed = aggregate(config, [RunRecord(1e5, "S2FL", 0, 5, "failed")]).rows[0]
    assert math.isnan(all_failed.mean_T)
    assert all_failed.n_fail == 1


def test_empty_table_is_refused(tmp_path):
    with pytest.raises(ValueError):
        emit_csv(SweepTable(rows=()), tmp_path / "empty.csv")
    assert not (tmp_path / "empty.csv").exists()
    with pytest.raises(ValueError):
        parse_csv("# a=1\nfoo,bar\n")


def test_cli_reports_missing_config(tmp_path, capsys):
    assert main(["validate-config", "--config", str(tmp_path / "nope.json")]) == 1
    assert "❌" in capsys.readouterr().err


def test_cli_validate_config(tmp_path, capsys):
    path = _write_config(tmp_path, _tiny_config(schemes=["S2FL", "EBA"], realizations=4))
    assert main(["validate-config", "--config", str(path)]) == 0
    assert "8 runs" in capsys.readouterr().out

    bad = _write_config(tmp_path, _tiny_config(mode="tdma"), name="bad.json")
    assert main(["validate-config", "--config", str(bad)]) == 1


def test_cli_run_twice_reuses_the_result(tmp_path, capsys):
    path = _write_config(tmp_path, _tiny_config())
    assert main(["run", "--config", str(path)]) == 0
    assert (tmp_path / "results.csv").exists()
    capsys.readouterr()
    assert main(["run", "--config", str(path)]) == 0
    assert "⏭️" in capsys.readouterr().out


def test_cli_replay(tmp_path, capsys):
    instance_path = tmp_path / "instance.json"
    instance_path.write_text(instance_to_json(sampled(seed=1, num_devices=2)), encoding="utf-8")
    trace_path = tmp_path / "trace.csv"
    assert main(["replay", "--instance", str(instance_path), "--scheme", "FLA", "--trace-out", str(trace_path)]) == 0
    out = capsys.readouterr().out
    assert "Scheme FLA (fdma)" in out
    assert trace_path.read_text(encoding="utf-8").startswith("iteration,objective")

    assert main(["replay", "--instance", str(instance_path), "--scheme", "XYZ"]) == 1
    assert main(["replay", "--instance", str(tmp_path / "none.json")]) == 1


def test_cli_convergence_rejects_bad_sizes(tmp_path):
    path = _write_config(tmp_path, _tiny_config())
    assert main(["convergence", "--config", str(path), "--sizes", "4,x", "--out", str(tmp_path / "c.csv")]) == 1
    assert main(["convergence", "--config", str(path), "--sizes", "0", "--out", str(tmp_path / "c.csv")]) == 1


def _trend(tmp_path, variable, grid):
    config = ExperimentConfig.from_mapping(
        _tiny_config(
            sweep={"variable": variable, "grid": grid},
            realizations=5,
            system={"num_devices": 6},
            solver={"max_iter": 50},
            output_path=str(tmp_path / "trend.csv"),
        )
    )
    table, _ = run_sweep(config)
    assert all(row.n_fail == 0 for row in table.rows)
    return [row.mean_T for row in table.rows]


@pytest.mark.slow
def test_more_power_shortens_completion(tmp_path):
    means = _trend(tmp_path, "P0_dBm", [36.0, 40.0, 44.0])
    assert means[0] > means[1] > means[2]


@pytest.mark.slow
def test_more_data_lengthens_completion(tmp_path):
    means = _trend(tmp_path, "D0", [5e4, 1e5, 2e5])
    assert means[0] < means[1] < means[2]


@pytest.mark.slow
def test_more_antennas_shorten_completion(tmp_path):
    means = _trend(tmp_path, "Na", [2, 4, 8])
    assert means[0] > means[1] > means[2]


@pytest.mark.slow
def test_more_bandwidth_shortens_completion(tmp_path):
    means = _trend(tmp_path, "B", [2.5e5, 5e5, 1e6])
    assert means[0] > means[1] > means[2]


@pytest.mark.slow
def test_looser_accuracy_target_shortens_completion(tmp_path):
    means = _trend(tmp_path, "eps0", [1e-4, 1e-3, 1e-2])
    assert means[0] > means[1] > means[2]


@pytest.mark.slow
def test_noma_upload_beats_fdma_on_average(tmp_path):
    profile = Path(__file__).resolve().parents[1] / "config.access.json"
    data = load_config(str(profile))
    data.update(
        sweep={"variable": "P0_dBm", "grid": [40.0]},
        output_path=str(tmp_path / "access.csv"),
        workers=1,
    )
    config = ExperimentConfig.from_mapping(data)
    assert config.schemes == ("S2FL", "S2FL-NOMA")
    assert config.realizations == 20

    table, _ = run_sweep(config)
    fdma, noma = table.rows
    assert (fdma.scheme, noma.scheme) == ("S2FL", "S2FL-NOMA")
    assert fdma.n_fail == noma.n_fail == 0
    assert noma.mean_T <= fdma.mean_T


def test_cli_reports_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "blocker.txt"
    blocker.write_text("occupied", encoding="utf-8")
    path = _write_config(tmp_path, _tiny_config(output_path=str(blocker / "out.csv")))
    assert main(["run", "--config", str(path)]) == 1
    err = capsys.readouterr().err
    assert "❌" in err
    assert "blocker.txt" in err
