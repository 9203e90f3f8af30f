"""Command-line pipeline: simulate, reconstruct, study, render, report."""

import csv
import json

import numpy as np
import pytest

from ptmtomo.cli import main
from ptmtomo.scenarios import MeasurementSpec, Scenario, hardware_like_scenario
from ptmtomo.serialize import (
    digest_file,
    load_json,
    load_result,
    save_json,
    save_scenario,
)


def _write_noiseless_identity(tmp_path, name="ident"):
    scenario = Scenario(
        name=name,
        n_qubits=2,
        process="IxI",
        seed=None,
        measurement=MeasurementSpec(sqrt_variance=0.0),
    )
    path = tmp_path / "scenario.json"
    save_scenario(scenario, path)
    return path


def _write_hardware_like(tmp_path):
    path = tmp_path / "hw.json"
    save_scenario(hardware_like_scenario(seed=1), path)
    return path


def test_simulate_writes_record_with_provenance(tmp_path):
    scenario_path = _write_noiseless_identity(tmp_path)
    assert main(["simulate", str(scenario_path), "--out", str(tmp_path)]) == 0
    record_path = tmp_path / "ident_record.json"
    payload = load_json(record_path)
    assert payload["schema"] == "qpt-record/1"
    assert payload["tool_version"].startswith("ptmtomo ")
    assert payload["source_digest"] == digest_file(scenario_path)
    assert (tmp_path / "ident_record.csv").exists()


def test_simulate_is_bit_reproducible(tmp_path):
    scenario_path = _write_hardware_like(tmp_path)
    for sub in ("a", "b"):
        (tmp_path / sub).mkdir()
        assert main(["simulate", str(scenario_path), "--out", str(tmp_path / sub)]) == 0
    name = "hardware-like_cnot_record.json"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_reconstruct_noiseless_identity_is_perfect(tmp_path, capsys):
    scenario_path = _write_noiseless_identity(tmp_path)
    main(["simulate", str(scenario_path), "--out", str(tmp_path)])
    code = main([
        "reconstruct", str(tmp_path / "ident_record.json"),
        "--gate", "IxI", "--out", str(tmp_path),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "F_g = 1.0000" in out
    result = load_result(tmp_path / "IxI_result.json")
    assert np.abs(result["r_mle"] - np.eye(16)).max() < 1e-9
    assert result["solver_report"].status == "optimal"
    assert result["diagnostics"]["f_g"] == pytest.approx(1.0, abs=1e-9)
    row_csv = tmp_path / "IxI_row.csv"
    with row_csv.open() as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[0]["f_g"]) == pytest.approx(1.0, abs=1e-9)


def test_reconstruct_hardware_like_band(tmp_path):
    scenario_path = _write_hardware_like(tmp_path)
    main(["simulate", str(scenario_path), "--out", str(tmp_path)])
    code = main([
        "reconstruct", str(tmp_path / "hardware-like_cnot_record.json"),
        "--scenario", str(scenario_path), "--gate", "CNOT",
        "--out", str(tmp_path),
    ])
    assert code == 0
    result = load_result(tmp_path / "CNOT_result.json")
    assert 0.95 < result["diagnostics"]["f_g"] < 0.97
    assert result["record_digest"] == digest_file(
        tmp_path / "hardware-like_cnot_record.json"
    )


def test_reconstruct_linear_only_reports_physicality(tmp_path):
    scenario_path = _write_hardware_like(tmp_path)
    main(["simulate", str(scenario_path), "--out", str(tmp_path)])
    code = main([
        "reconstruct", str(tmp_path / "hardware-like_cnot_record.json"),
        "--scenario", str(scenario_path), "--gate", "CNOT",
        "--linear-only", "--out", str(tmp_path),
    ])
    assert code == 0
    result = load_result(tmp_path / "CNOT_result.json")
    assert result["r_mle"] is None
    assert result["solver_report"] is None
    diag = result["diagnostics"]
    assert diag["negative_weight"] < 0.0
    assert diag["lambda_max"] > 0.9
    assert "r_identity" in diag


def test_malformed_input_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "qpt-scenario/1",\n  broken\n}')
    assert main(["simulate", str(bad), "--out", str(tmp_path)]) == 2
    assert "bad.json:2" in capsys.readouterr().err


def test_unknown_gate_exits_2(tmp_path, capsys):
    scenario_path = _write_noiseless_identity(tmp_path)
    main(["simulate", str(scenario_path), "--out", str(tmp_path)])
    code = main([
        "reconstruct", str(tmp_path / "ident_record.json"),
        "--gate", "Hadamard", "--out", str(tmp_path),
    ])
    assert code == 2
    assert "Hadamard" in capsys.readouterr().err


def test_iteration_starved_solver_exits_3_unless_allowed(tmp_path):
    scenario_path = _write_hardware_like(tmp_path)
    main(["simulate", str(scenario_path), "--out", str(tmp_path)])
    record = str(tmp_path / "hardware-like_cnot_record.json")
    starved = [
        "reconstruct", record, "--scenario", str(scenario_path),
        "--gate", "CNOT", "--max-iterations", "3", "--out", str(tmp_path),
    ]
    assert main(starved) == 3
    # the result file is still written for inspection
    result = load_result(tmp_path / "CNOT_result.json")
    assert result["solver_report"].status != "optimal"
    assert main(starved + ["--allow-nonoptimal"]) == 0


def test_degenerate_design_exits_4(tmp_path, capsys):
    scenario_path = _write_noiseless_identity(tmp_path)
    main(["simulate", str(scenario_path), "--out", str(tmp_path)])
    payload = load_json(tmp_path / "ident_record.json")
    payload["values"] = [[0.0] * 36 for _ in range(36)]
    crippled = tmp_path / "flat_record.json"
    save_json(crippled, payload)
    assert main(["reconstruct", str(crippled), "--out", str(tmp_path)]) == 4
    assert "rank" in capsys.readouterr().err.lower()


def test_bootstrap_study_noiseless_gives_zero_bar(tmp_path):
    scenario_path = _write_noiseless_identity(tmp_path)
    main(["simulate", str(scenario_path), "--out", str(tmp_path)])
    study = tmp_path / "study.json"
    save_json(study, {
        "schema": "qpt-study/1",
        "kind": "bootstrap",
        "record_file": "ident_record.json",
        "gate": "IxI",
        "replicates": 5,
        "seed": 0,
    })
    assert main(["study", str(study), "--out", str(tmp_path), "--workers", "2"]) == 0
    result = load_json(tmp_path / "bootstrap_IxI.json")
    assert result["schema"] == "qpt-bootstrap/1"
    assert result["delta_f_g"] == 0.0
    assert result["record_digest"] == digest_file(tmp_path / "ident_record.json")
    with (tmp_path / "bootstrap_IxI_replicates.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5
    assert all(float(r["f_g"]) == pytest.approx(1.0, abs=1e-9) for r in rows)


def test_decay_study_ideal_gate_stays_perfect(tmp_path):
    study = tmp_path / "decay.json.in"
    save_json(study, {
        "schema": "qpt-study/1",
        "kind": "decay",
        "gate": "CNOT",
        "n_max": 6,
        "fit": False,
    })
    assert main(["study", str(study), "--out", str(tmp_path)]) == 0
    payload = load_json(tmp_path / "decay.json")
    assert payload["fit"] is None
    fidelities = [row["state_fidelity"] for row in payload["rows"]]
    assert len(fidelities) == 7
    assert max(abs(f - 1.0) for f in fidelities) < 1e-9
    concurrences = [row["concurrence"] for row in payload["rows"]]
    assert concurrences[0] == pytest.approx(0.0, abs=1e-7)
    assert concurrences[1] == pytest.approx(1.0, abs=1e-7)


def test_decay_study_depolarizing_fit_recovers_rate(tmp_path):
    study = tmp_path / "decay.json.in"
    save_json(study, {
        "schema": "qpt-study/1",
        "kind": "decay",
        "gate": "CNOT",
        "n_max": 10,
        "noise": {"depolarizing": 0.03},
    })
    assert main(["study", str(study), "--out", str(tmp_path)]) == 0
    payload = load_json(tmp_path / "decay.json")
    assert payload["fit"]["converged"] is True
    assert payload["fit"]["f_g"] == pytest.approx(0.97, abs=1e-6)


def test_faulty_study_csv_layout(tmp_path):
    study = tmp_path / "faulty.json"
    save_json(study, {
        "schema": "qpt-study/1",
        "kind": "faulty-gateset",
        "epsilons": [0.1, 0.3],
        "trials": 3,
        "seed": 2,
    })
    assert main(["study", str(study), "--out", str(tmp_path), "--workers", "4"]) == 0
    with (tmp_path / "faulty_gateset.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert float(rows[0]["pulse_f_g"]) > float(rows[1]["pulse_f_g"])
    assert float(rows[0]["recon_f_g"]) > float(rows[1]["recon_f_g"])
    payload = load_json(tmp_path / "faulty_gateset.json")
    assert payload["source_digest"] == digest_file(study)


def test_render_produces_grid_and_figures(tmp_path):
    scenario_path = _write_noiseless_identity(tmp_path)
    main(["simulate", str(scenario_path), "--out", str(tmp_path)])
    main([
        "reconstruct", str(tmp_path / "ident_record.json"),
        "--gate", "IxI", "--out", str(tmp_path),
    ])
    code = main([
        "render", str(tmp_path / "IxI_result.json"), "--out", str(tmp_path),
    ])
    assert code == 0
    grid = tmp_path / "IxI_mle_grid.csv"
    assert grid.exists()
    with grid.open() as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("#")
    cells = list(csv.DictReader(lines[1:]))
    diag = [float(c["value"]) for c in cells if c["row"] == c["col"]]
    assert len(diag) == 16
    assert max(abs(v - 1.0) for v in diag) < 1e-9
    assert (tmp_path / "IxI_mle_heatmap.svg").exists()
    assert (tmp_path / "IxI_mle_heatmap.png").exists()
    assert (tmp_path / "IxI_mle_bars.json").exists()


def test_report_merges_bootstrap_by_digest(tmp_path):
    scenario_path = _write_noiseless_identity(tmp_path)
    main(["simulate", str(scenario_path), "--out", str(tmp_path)])
    main([
        "reconstruct", str(tmp_path / "ident_record.json"),
        "--gate", "IxI", "--out", str(tmp_path),
    ])
    study = tmp_path / "study.json"
    save_json(study, {
        "schema": "qpt-study/1",
        "kind": "bootstrap",
        "record_file": "ident_record.json",
        "gate": "IxI",
        "replicates": 3,
    })
    main(["study", str(study), "--out", str(tmp_path)])
    code = main([
        "report", str(tmp_path / "IxI_result.json"),
        "--bootstrap", str(tmp_path / "bootstrap_IxI.json"),
        "--out", str(tmp_path),
    ])
    assert code == 0
    with (tmp_path / "report.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["gate"] == "IxI"
    assert float(rows[0]["delta_f_g"]) == 0.0
    report_json = load_json(tmp_path / "report.json")
    assert report_json["schema"] == "qpt-report/1"
    assert (tmp_path / "report_fidelity.png").exists()


def test_end_to_end_outputs_are_reproducible(tmp_path):
    scenario_path = _write_hardware_like(tmp_path)
    for sub in ("a", "b"):
        out = tmp_path / sub
        out.mkdir()
        main(["simulate", str(scenario_path), "--out", str(out)])
        main([
            "reconstruct", str(out / "hardware-like_cnot_record.json"),
            "--scenario", str(scenario_path), "--gate", "CNOT",
            "--out", str(out),
        ])
    a = (tmp_path / "a" / "CNOT_result.json").read_bytes()
    b = (tmp_path / "b" / "CNOT_result.json").read_bytes()
    assert a == b
