"""File formats for records, reconstruction results and study descriptions.

All JSON artifacts carry a versioned ``schema`` tag and are written
canonically (sorted keys, compact separators, trailing newline) so that a
given payload always produces identical bytes; SHA-256 digests of those
bytes are what downstream artifacts embed to reference their inputs.
Floats survive the round trip bit-exactly because ``repr`` produces the
shortest string that parses back to the same double.
"""

from __future__ import annotations

import csv
import hashlib
import json
from importlib import metadata
from pathlib import Path

import numpy as np

from .measurement import MeasurementRecord
from .pauli import pauli_labels
from .reconstruction import SolverOptions, SolverReport
from .scenarios import Scenario

try:
    TOOL_VERSION = "ptmtomo " + metadata.version("ptmtomo")
except metadata.PackageNotFoundError:  # running from a source tree
    TOOL_VERSION = "ptmtomo 0.1.0"

RECORD_SCHEMA = "qpt-record/1"
RESULT_SCHEMA = "qpt-result/1"
SCENARIO_SCHEMA = "qpt-scenario/1"
STUDY_SCHEMA = "qpt-study/1"
BOOTSTRAP_SCHEMA = "qpt-bootstrap/1"
FAULTY_SCHEMA = "qpt-faulty-gateset/1"
DECAY_SCHEMA = "qpt-decay/1"
STUDY_KINDS = ("bootstrap", "faulty-gateset", "decay")


class SchemaError(ValueError):
    """A file failed validation; the message pinpoints the offending field."""


# Low-level helpers --------------------------------------------------------


def canonical_bytes(payload: dict) -> bytes:
    """Canonical JSON encoding used for both files and digests."""
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode()


def digest_bytes(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def digest_file(path: str | Path) -> str:
    return digest_bytes(Path(path).read_bytes())


def save_json(path: str | Path, payload: dict) -> str:
    """Write canonical JSON and return the digest of the written bytes."""
    data = canonical_bytes(payload)
    Path(path).write_bytes(data)
    return digest_bytes(data)


def load_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror or exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise SchemaError(f"{path}: top level must be a JSON object")
    return payload


def check_schema(payload: dict, expected: str, path: str = "") -> None:
    tag = payload.get("schema")
    if tag != expected:
        where = f"{path}.schema" if path else "schema"
        raise SchemaError(f"{where}: expected {expected!r}, got {tag!r}")


def _require(payload: dict, key: str, path: str = ""):
    if key not in payload:
        where = f"{path}.{key}" if path else key
        raise SchemaError(f"{where}: missing required field")
    return payload[key]


def _as_matrix(value, shape: tuple[int, int], where: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: not a numeric matrix ({exc})") from exc
    if arr.shape != shape:
        raise SchemaError(f"{where}: expected shape {shape}, got {arr.shape}")
    return arr


# Measurement records ------------------------------------------------------


def record_to_dict(record: MeasurementRecord, source_digest: str | None = None) -> dict:
    payload = {
        "schema": RECORD_SCHEMA,
        "tool_version": TOOL_VERSION,
        "n_qubits": record.n_qubits,
        "labels_prep": list(record.labels_prep),
        "labels_meas": list(record.labels_analysis),
        "values": record.values.tolist(),
        "variances": record.variances.tolist(),
        "shots": record.shots,
        "seed": record.seed,
        "scenario": record.scenario,
    }
    if source_digest is not None:
        payload["source_digest"] = source_digest
    return payload


def record_from_dict(payload: dict, path: str = "") -> MeasurementRecord:
    check_schema(payload, RECORD_SCHEMA, path)
    n_qubits = int(_require(payload, "n_qubits", path))
    if n_qubits not in (1, 2):
        raise SchemaError(f"{path}.n_qubits: must be 1 or 2" if path else "n_qubits: must be 1 or 2")
    n_dirs = 6**n_qubits
    labels_prep = tuple(str(x) for x in _require(payload, "labels_prep", path))
    labels_meas = tuple(str(x) for x in _require(payload, "labels_meas", path))
    for name, labels in (("labels_prep", labels_prep), ("labels_meas", labels_meas)):
        if len(labels) != n_dirs:
            where = f"{path}.{name}" if path else name
            raise SchemaError(f"{where}: expected {n_dirs} labels, got {len(labels)}")
    values = _as_matrix(
        _require(payload, "values", path), (n_dirs, n_dirs), f"{path}.values" if path else "values"
    )
    variances = np.asarray(_require(payload, "variances", path), dtype=float)
    if variances.shape != (n_dirs,):
        where = f"{path}.variances" if path else "variances"
        raise SchemaError(f"{where}: expected {n_dirs} entries, got {variances.shape}")
    seed = payload.get("seed")
    return MeasurementRecord(
        n_qubits=n_qubits,
        labels_prep=labels_prep,
        labels_analysis=labels_meas,
        values=values,
        variances=variances,
        shots=int(_require(payload, "shots", path)),
        seed=None if seed is None else int(seed),
        scenario=str(payload.get("scenario", "")),
    )


def save_record(
    record: MeasurementRecord, path: str | Path, source_digest: str | None = None
) -> str:
    return save_json(path, record_to_dict(record, source_digest))


def load_record(path: str | Path) -> MeasurementRecord:
    payload = load_json(path)
    try:
        return record_from_dict(payload)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def record_to_csv(record: MeasurementRecord, path: str | Path) -> None:
    """Mirror the measurement grid as CSV with preparation/analysis labels."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["prep\\analysis", *record.labels_analysis])
        for label, row in zip(record.labels_prep, record.values):
            writer.writerow([label, *[repr(float(x)) for x in row]])
        writer.writerow(["variance", *[repr(float(v)) for v in record.variances]])


# Reconstruction results ---------------------------------------------------


def solver_report_to_dict(report: SolverReport) -> dict:
    return {
        "solver": report.solver,
        "status": report.status,
        "iterations": report.iterations,
        "primal_objective": report.primal_objective,
        "min_choi_eigenvalue": report.min_choi_eigenvalue,
        "kkt_residual": report.kkt_residual,
        "tp_constraint": report.tp_constraint,
        "message": report.message,
    }


def solver_report_from_dict(payload: dict, where: str = "solver_report") -> SolverReport:
    for key in ("solver", "status", "iterations", "primal_objective"):
        if key not in payload:
            raise SchemaError(f"{where}.{key}: missing required field")
    return SolverReport(
        solver=str(payload["solver"]),
        status=str(payload["status"]),
        iterations=int(payload["iterations"]),
        primal_objective=float(payload["primal_objective"]),
        min_choi_eigenvalue=float(payload.get("min_choi_eigenvalue", 0.0)),
        kkt_residual=float(payload.get("kkt_residual", 0.0)),
        tp_constraint=bool(payload.get("tp_constraint", False)),
        message=str(payload.get("message", "")),
    )


def solver_options_to_dict(options: SolverOptions) -> dict:
    return {
        "solver": options.solver,
        "tp_constraint": options.tp_constraint,
        "max_iterations": options.max_iterations,
        "pg_max_iterations": options.pg_max_iterations,
        "gap_tolerance": options.gap_tolerance,
        "pg_step_tolerance": options.pg_step_tolerance,
        "cp_shortcut_slack": options.cp_shortcut_slack,
    }


def result_to_dict(
    *,
    record: MeasurementRecord,
    record_digest: str,
    r_mle: np.ndarray | None,
    r_linear: np.ndarray,
    report: SolverReport | None,
    options: SolverOptions,
    diagnostics: dict | None = None,
    gate: str | None = None,
) -> dict:
    """Assemble the result payload for one reconstructed process."""
    return {
        "schema": RESULT_SCHEMA,
        "tool_version": TOOL_VERSION,
        "record_digest": record_digest,
        "scenario": record.scenario,
        "gate": gate,
        "n_qubits": record.n_qubits,
        "r_mle": None if r_mle is None else np.asarray(r_mle).tolist(),
        "r_linear": np.asarray(r_linear).tolist(),
        "solver_report": None if report is None else solver_report_to_dict(report),
        "options": solver_options_to_dict(options),
        "diagnostics": diagnostics,
    }


def load_result(path: str | Path) -> dict:
    """Load and validate a result file; matrices come back as arrays."""
    payload = load_json(path)
    try:
        check_schema(payload, RESULT_SCHEMA)
        n_qubits = int(_require(payload, "n_qubits"))
        d2 = 4**n_qubits
        payload["r_linear"] = _as_matrix(_require(payload, "r_linear"), (d2, d2), "r_linear")
        if payload.get("r_mle") is not None:
            payload["r_mle"] = _as_matrix(payload["r_mle"], (d2, d2), "r_mle")
        if payload.get("solver_report") is not None:
            payload["solver_report"] = solver_report_from_dict(payload["solver_report"])
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    return payload


def transfer_matrix_csv(
    r: np.ndarray, n_qubits: int, path: str | Path, comment: str = ""
) -> None:
    """One row per matrix cell: Pauli labels, indices and the value."""
    labels = pauli_labels(n_qubits)
    r = np.asarray(r, dtype=float)
    with open(path, "w", newline="") as handle:
        if comment:
            handle.write(f"# {comment}\n")
        writer = csv.writer(handle)
        writer.writerow(["row_label", "col_label", "row", "col", "value"])
        for i, row_label in enumerate(labels):
            for j, col_label in enumerate(labels):
                writer.writerow([row_label, col_label, i, j, repr(float(r[i, j]))])


# Scenarios ----------------------------------------------------------------


def save_scenario(scenario: Scenario, path: str | Path) -> str:
    return save_json(path, {"schema": SCENARIO_SCHEMA, **scenario.as_dict()})


def load_scenario(path: str | Path) -> Scenario:
    payload = load_json(path)
    try:
        check_schema(payload, SCENARIO_SCHEMA)
        return Scenario.from_dict(payload)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


# Study descriptions -------------------------------------------------------


def load_study(path: str | Path) -> dict:
    """Load a study file and validate the fields its kind requires."""
    payload = load_json(path)
    try:
        check_schema(payload, STUDY_SCHEMA)
        kind = _require(payload, "kind")
        if kind not in STUDY_KINDS:
            raise SchemaError(f"kind: expected one of {STUDY_KINDS}, got {kind!r}")
        if kind == "bootstrap":
            _require(payload, "record_file")
            replicates = int(payload.get("replicates", 100))
            if replicates < 2:
                raise SchemaError("replicates: need at least 2")
        elif kind == "faulty-gateset":
            targets = payload.get("target_pulse_fidelities")
            epsilons = payload.get("epsilons")
            if not targets and not epsilons:
                raise SchemaError(
                    "faulty-gateset study needs target_pulse_fidelities or epsilons"
                )
            for name, seq in (("target_pulse_fidelities", targets), ("epsilons", epsilons)):
                if seq is not None and not all(float(x) > 0 for x in seq):
                    raise SchemaError(f"{name}: entries must be positive")
        else:  # decay
            n_max = int(payload.get("n_max", 12))
            if n_max < 1:
                raise SchemaError("n_max: must be at least 1")
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    return payload


# Generic tables -----------------------------------------------------------


def rows_to_csv(rows: list[dict], path: str | Path) -> None:
    """Write homogeneous dict rows as CSV, preserving first-row key order."""
    if not rows:
        Path(path).write_text("")
        return
    fieldnames = list(rows[0])
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
