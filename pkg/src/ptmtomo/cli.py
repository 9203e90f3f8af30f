"""Command-line pipeline: simulate, reconstruct, study, render, report.

Each subcommand is one pipeline stage reading and writing plain files, so
intermediate artifacts (records, results, study tables) can be cached,
inspected and fed to later stages independently.  Every output embeds the
SHA-256 digest of the file it was derived from plus the tool version.

Exit codes: 0 success, 2 malformed input file, 3 solver finished without
an optimality certificate (override with --allow-nonoptimal), 4 the
measurement design was numerically rank deficient.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    bootstrap,
    calibrate_epsilon,
    faulty_gateset_study,
    fit_decay,
    repeated_gate_experiment,
)
from .gates import process_menu, process_ptm
from .measurement import ideal_gateset, register_decoherence_ptm
from .metrics import (
    choi_of_ptm,
    diagnose,
    gate_fidelity,
    hermitian_eig,
    negative_eigenvalue_weight,
    process_fidelity,
)
from .reconstruction import (
    RankDeficientDesignError,
    ReconstructionError,
    Reconstructor,
    SolverOptions,
)
from .render import render_transfer_matrix
from .report import write_report
from .scenarios import Scenario
from .serialize import (
    BOOTSTRAP_SCHEMA,
    DECAY_SCHEMA,
    FAULTY_SCHEMA,
    TOOL_VERSION,
    SchemaError,
    digest_file,
    load_json,
    load_record,
    load_result,
    load_scenario,
    load_study,
    record_to_csv,
    result_to_dict,
    rows_to_csv,
    save_json,
    save_record,
)

SOLVER_CHOICES = ("interior-point", "projected-gradient")


def _slug(name: str) -> str:
    cleaned = "".join(c if c.isalnum() or c in "-_" else "_" for c in name.strip())
    return cleaned.strip("_") or "output"


def _out_dir(args, fallback: str = ".") -> Path:
    out = Path(args.out if args.out is not None else fallback)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solver_options(args) -> SolverOptions:
    options = SolverOptions(solver=args.solver, tp_constraint=args.tp_constraint)
    if args.max_iterations is not None:
        options = dataclasses.replace(options, max_iterations=args.max_iterations)
    return options


# simulate -----------------------------------------------------------------


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    record = scenario.simulate()
    out = _out_dir(args, scenario.out_dir or ".")
    stem = _slug(scenario.name)
    record_path = out / f"{stem}_record.json"
    save_record(record, record_path, source_digest=digest_file(args.scenario))
    record_to_csv(record, out / f"{stem}_record.csv")
    print(f"{record_path}  ({record.values.shape[0]}x{record.values.shape[1]} grid)")
    return 0


# reconstruct --------------------------------------------------------------


def _ideal_target(args, record, scenario: Scenario | None) -> tuple[str | None, np.ndarray | None]:
    """Pick the ideal gate to diagnose against, if one can be named."""
    if args.gate is not None:
        if args.gate not in process_menu():
            raise SchemaError(f"--gate: unknown gate {args.gate!r}")
        return args.gate, process_ptm(args.gate)
    if scenario is not None and isinstance(scenario.process, str):
        return scenario.process, process_ptm(scenario.process)
    if record.scenario in process_menu():
        return record.scenario, process_ptm(record.scenario)
    return None, None


def _linear_diagnostics(gate: str | None, r_linear: np.ndarray, r_ideal: np.ndarray | None) -> dict:
    """Physicality measures available without the constrained fit."""
    choi = choi_of_ptm(r_linear)
    eigenvalues = hermitian_eig(choi)[0]
    diagnostics = {
        "gate": gate or "",
        "r_identity": float(r_linear[0, 0]),
        "lambda_max": float(eigenvalues.max()),
        "negative_weight": float(negative_eigenvalue_weight(choi)),
    }
    if r_ideal is not None:
        f_p = process_fidelity(r_ideal, r_linear, check_unitary=False)
        diagnostics["f_p"] = f_p
        diagnostics["f_g"] = gate_fidelity(f_p, 2**_n_from_dim(r_linear.shape[0]))
    return diagnostics


def _n_from_dim(d2: int) -> int:
    return int(round(np.log2(d2) / 2))


def cmd_reconstruct(args) -> int:
    record = load_record(args.record)
    record_digest = digest_file(args.record)
    scenario = load_scenario(args.scenario) if args.scenario is not None else None
    meas = None
    if scenario is not None:
        meas = scenario.reconstruction_measurement()
    gate, r_ideal = _ideal_target(args, record, scenario)
    options = _solver_options(args)
    recon = Reconstructor(record, gates=ideal_gateset(record.n_qubits), meas=meas, options=options)
    r_linear = recon.linear(record.values)

    status = "linear-only"
    r_mle = None
    report = None
    diagnostics: dict | None = None
    if args.linear_only:
        diagnostics = _linear_diagnostics(gate, r_linear, r_ideal)
    else:
        r_mle, report = recon.mle(record.values)
        status = report.status
        if r_ideal is not None:
            diagnostics = dataclasses.asdict(diagnose(gate or "", r_mle, r_linear, r_ideal))

    out = _out_dir(args)
    stem = _slug(gate or record.scenario or "process")
    payload = result_to_dict(
        record=record,
        record_digest=record_digest,
        r_mle=r_mle,
        r_linear=r_linear,
        report=report,
        options=options,
        diagnostics=diagnostics,
        gate=gate,
    )
    result_path = out / f"{stem}_result.json"
    save_json(result_path, payload)
    if diagnostics is not None and "f_g" in diagnostics:
        rows_to_csv([{"gate": stem, **diagnostics}], out / f"{stem}_row.csv")
        print(f"{result_path}  F_g = {diagnostics['f_g']:.4f}  status = {status}")
    else:
        print(f"{result_path}  status = {status}")
    if report is not None and report.status != "optimal" and not args.allow_nonoptimal:
        print(f"error: solver status {report.status!r}: {report.message}", file=sys.stderr)
        return 3
    return 0


# study --------------------------------------------------------------------


def _study_bootstrap(args, payload, study_dir: Path) -> int:
    record_path = study_dir / payload["record_file"]
    record = load_record(record_path)
    gate = payload.get("gate") or (record.scenario if record.scenario in process_menu() else None)
    if gate is None:
        raise SchemaError("bootstrap study: no 'gate' given and record names none")
    meas = None
    if payload.get("scenario_file"):
        meas = load_scenario(study_dir / payload["scenario_file"]).reconstruction_measurement()
    replicates = args.replicates or int(payload.get("replicates", 100))
    seed = args.seed if args.seed is not None else int(payload.get("seed", 0))
    result = bootstrap(
        record,
        process_ptm(gate),
        meas=meas,
        replicates=replicates,
        seed=seed,
        workers=args.workers,
    )
    out = _out_dir(args)
    stem = f"bootstrap_{_slug(gate)}"
    save_json(
        out / f"{stem}.json",
        {
            "schema": BOOTSTRAP_SCHEMA,
            "tool_version": TOOL_VERSION,
            "record_digest": digest_file(record_path),
            "gate": gate,
            **result.as_dict(),
        },
    )
    rows_to_csv(
        [{"replicate": i, "f_g": float(f)} for i, f in enumerate(result.fidelities)],
        out / f"{stem}_replicates.csv",
    )
    print(
        f"{out / (stem + '.json')}  delta_f_g = {result.delta_f_g:.2e} "
        f"({result.replicates - result.failed}/{result.replicates} replicates)"
    )
    return 0


def _study_faulty(args, payload, study_digest: str) -> int:
    if payload.get("epsilons"):
        epsilons = [float(x) for x in payload["epsilons"]]
    else:
        targets = [float(x) for x in payload["target_pulse_fidelities"]]
        epsilons = [calibrate_epsilon(t) for t in targets]
    seed = args.seed if args.seed is not None else int(payload.get("seed", 0))
    rows = faulty_gateset_study(
        epsilons,
        trials_per_eps=int(payload.get("trials", 10)),
        seed=seed,
        decouple_roles=bool(payload.get("decouple_roles", True)),
        workers=args.workers,
    )
    out = _out_dir(args)
    table = [row.as_dict() for row in rows]
    rows_to_csv(table, out / "faulty_gateset.csv")
    save_json(
        out / "faulty_gateset.json",
        {
            "schema": FAULTY_SCHEMA,
            "tool_version": TOOL_VERSION,
            "source_digest": study_digest,
            "seed": seed,
            "rows": table,
        },
    )
    for row in rows:
        print(
            f"pulse F_g = {row.pulse_f_g:.4f}  recon F_g = {row.recon_f_g:.4f}  "
            f"half distance = {row.half_distance_frobenius:.4f}"
        )
    return 0


def _decay_noise(payload, n_qubits: int) -> np.ndarray | None:
    spec = payload.get("noise")
    if spec is None:
        return None
    if "depolarizing" in spec:
        p = float(spec["depolarizing"])
        if not 0.0 <= p <= 1.0:
            raise SchemaError("noise.depolarizing: must be in [0, 1]")
        diag = np.full(4**n_qubits, 1.0 - p)
        diag[0] = 1.0
        return np.diag(diag)
    if {"t1_us", "t2_us", "duration_ns"} <= set(spec):
        return register_decoherence_ptm(
            spec["t1_us"], spec["t2_us"], float(spec["duration_ns"]), n_qubits
        )
    raise SchemaError("noise: expected 'depolarizing' or t1_us/t2_us/duration_ns fields")


def _study_decay(args, payload, study_digest: str) -> int:
    gate_name = str(payload.get("gate", "CNOT"))
    if gate_name not in process_menu():
        raise SchemaError(f"gate: unknown gate {gate_name!r}")
    n_max = int(payload.get("n_max", 12))
    noise = _decay_noise(payload, 2)
    experiment = repeated_gate_experiment(
        gate=process_ptm(gate_name), n_max=n_max, noise=noise
    )
    fit = None
    if bool(payload.get("fit", True)) and len(experiment.n_values) >= 4:
        fit = fit_decay(experiment.fidelities, experiment.n_values)
    out = _out_dir(args)
    table = [
        {
            "n": int(n),
            "state_fidelity": float(f),
            "concurrence": float(c),
        }
        for n, f, c in zip(
            experiment.n_values, experiment.fidelities, experiment.concurrences
        )
    ]
    rows_to_csv(table, out / "decay.csv")
    fit_payload = None
    if fit is not None:
        fit_payload = {
            "a": fit.a,
            "b": fit.b,
            "f_g": fit.f_g,
            "residual": fit.residual,
            "converged": fit.converged,
            "degenerate": fit.degenerate,
        }
    save_json(
        out / "decay.json",
        {
            "schema": DECAY_SCHEMA,
            "tool_version": TOOL_VERSION,
            "source_digest": study_digest,
            "gate": gate_name,
            "rows": table,
            "fit": fit_payload,
        },
    )
    if fit is not None:
        print(f"{out / 'decay.json'}  fitted F_g = {fit.f_g:.4f} (1 - F_g = {1 - fit.f_g:.4f})")
    else:
        print(out / "decay.json")
    return 0


def cmd_study(args) -> int:
    payload = load_study(args.study)
    study_digest = digest_file(args.study)
    study_dir = Path(args.study).parent
    kind = payload["kind"]
    if kind == "bootstrap":
        return _study_bootstrap(args, payload, study_dir)
    if kind == "faulty-gateset":
        return _study_faulty(args, payload, study_digest)
    return _study_decay(args, payload, study_digest)


# render -------------------------------------------------------------------


def cmd_render(args) -> int:
    payload = load_result(args.result)
    which = args.which
    if which == "auto":
        which = "mle" if payload.get("r_mle") is not None else "linear"
    key = "r_mle" if which == "mle" else "r_linear"
    if payload.get(key) is None:
        raise SchemaError(f"{args.result}: result has no {key} matrix to render")
    matrix = payload[key]
    out = _out_dir(args)
    stem = f"{_slug(payload.get('gate') or payload.get('scenario') or 'process')}_{which}"
    title = payload.get("gate") or payload.get("scenario") or ""
    paths = render_transfer_matrix(
        matrix,
        int(payload["n_qubits"]),
        out,
        stem,
        title=title,
        source_digest=digest_file(args.result),
    )
    for path in paths:
        print(path)
    return 0


# report -------------------------------------------------------------------


def cmd_report(args) -> int:
    results = [load_result(path) for path in args.results]
    bootstraps = []
    for path in args.bootstrap or []:
        payload = load_json(path)
        if payload.get("schema") != BOOTSTRAP_SCHEMA:
            raise SchemaError(f"{path}: expected schema {BOOTSTRAP_SCHEMA!r}")
        bootstraps.append(payload)
    out = _out_dir(args)
    paths = write_report(results, out, bootstraps=bootstraps)
    for path in paths:
        print(path)
    return 0


# parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptmtomo",
        description="Simulate and reconstruct quantum process tomography experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", default=None, help="output directory (default: current)")
        p.add_argument("--seed", type=int, default=None, help="override the stage seed")

    p_sim = sub.add_parser("simulate", help="generate a measurement record from a scenario file")
    p_sim.add_argument("scenario", help="scenario JSON (schema qpt-scenario/1)")
    add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_rec = sub.add_parser("reconstruct", help="fit a process to a measurement record")
    p_rec.add_argument("record", help="record JSON (schema qpt-record/1)")
    add_common(p_rec)
    p_rec.add_argument(
        "--scenario",
        default=None,
        help="scenario file supplying the readout calibration (default: self-calibrate)",
    )
    p_rec.add_argument("--gate", default=None, help="ideal gate to diagnose against")
    p_rec.add_argument(
        "--solver", choices=SOLVER_CHOICES, default="interior-point", help="constrained solver"
    )
    p_rec.add_argument(
        "--tp-constraint", action="store_true", help="also enforce trace preservation exactly"
    )
    p_rec.add_argument("--max-iterations", type=int, default=None, help="solver iteration cap")
    p_rec.add_argument(
        "--linear-only", action="store_true", help="skip the constrained fit, report physicality only"
    )
    p_rec.add_argument(
        "--allow-nonoptimal",
        action="store_true",
        help="exit 0 even when the solver lacks an optimality certificate",
    )
    p_rec.set_defaults(func=cmd_reconstruct)

    p_study = sub.add_parser("study", help="run a bootstrap, faulty-gateset or decay study")
    p_study.add_argument("study", help="study JSON (schema qpt-study/1)")
    add_common(p_study)
    p_study.add_argument(
        "--replicates", type=int, default=None, help="bootstrap replicate count override"
    )
    p_study.add_argument("--workers", type=int, default=None, help="worker threads for refits")
    p_study.set_defaults(func=cmd_study)

    p_render = sub.add_parser("render", help="emit heatmaps and plot data for a result")
    p_render.add_argument("result", help="result JSON (schema qpt-result/1)")
    add_common(p_render)
    p_render.add_argument(
        "--which",
        choices=("auto", "mle", "linear"),
        default="auto",
        help="which reconstruction to draw",
    )
    p_render.set_defaults(func=cmd_render)

    p_report = sub.add_parser("report", help="merge results into a diagnostic table + figure")
    p_report.add_argument("results", nargs="+", help="result JSON files")
    add_common(p_report)
    p_report.add_argument(
        "--bootstrap",
        action="append",
        default=None,
        metavar="FILE",
        help="bootstrap study output whose error bar matches a result by record digest",
    )
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RankDeficientDesignError as exc:
        print(f"error: rank-deficient design: {exc}", file=sys.stderr)
        return 4
    except ReconstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
