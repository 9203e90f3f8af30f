"""Assembly of per-gate diagnostic tables and summary figures.

A report row carries the full error battery for one reconstructed gate:
process/gate fidelity, the bootstrap error bar when available, the
identity-to-identity transfer-matrix element, purified fidelity, the
eigenvalue-based physicality measures, and the pairwise half distances
between ideal, maximum-likelihood and linear-inversion processes in both
two-norm conventions.  Rows from several reconstructions merge into one
CSV/JSON table plus a fidelity bar figure.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .serialize import TOOL_VERSION, rows_to_csv, save_json

REPORT_SCHEMA = "qpt-report/1"

# Column order of the per-gate table; the first block mirrors the usual
# printed layout, the frobenius block gives the alternative convention.
REPORT_COLUMNS = (
    "gate",
    "f_p",
    "f_g",
    "delta_f_g",
    "r_identity",
    "f_pure",
    "lambda_max",
    "negative_weight",
    "half_dist_mle_ideal_printed",
    "half_dist_mle_data_printed",
    "half_dist_data_ideal_printed",
    "half_dist_mle_ideal_frobenius",
    "half_dist_mle_data_frobenius",
    "half_dist_data_ideal_frobenius",
    "solver_status",
    "record_digest",
)


def report_row(result: dict) -> dict:
    """Flatten one result payload into a report table row."""
    diagnostics = result.get("diagnostics") or {}
    report = result.get("solver_report")
    status = getattr(report, "status", None)
    if status is None and isinstance(report, dict):
        status = report.get("status")
    row = {key: diagnostics.get(key) for key in REPORT_COLUMNS}
    row["gate"] = diagnostics.get("gate") or result.get("gate") or result.get("scenario") or ""
    row["solver_status"] = status or ("linear-only" if result.get("r_mle") is None else "")
    row["record_digest"] = result.get("record_digest", "")
    return row


def attach_bootstrap(rows: list[dict], bootstraps: list[dict]) -> int:
    """Fill delta_f_g from bootstrap payloads, matching on record digest.

    Returns the number of rows that received an error bar.
    """
    by_digest = {b.get("record_digest"): b for b in bootstraps if b.get("record_digest")}
    attached = 0
    for row in rows:
        payload = by_digest.get(row.get("record_digest"))
        if payload is not None and payload.get("delta_f_g") is not None:
            row["delta_f_g"] = float(payload["delta_f_g"])
            attached += 1
    return attached


def fidelity_figure(rows: list[dict], path: str | Path) -> None:
    """Bar chart of gate fidelities with bootstrap error bars where known."""
    gates = [row["gate"] for row in rows]
    fids = [row["f_g"] if row["f_g"] is not None else 0.0 for row in rows]
    errors = [row["delta_f_g"] or 0.0 for row in rows]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.7 * len(rows) + 1.5), 3.2))
    ax.bar(range(len(rows)), fids, yerr=errors, capsize=3, color="#4878a8")
    ax.axhline(1.0, color="0.4", linewidth=0.8, linestyle="--")
    ax.set_xticks(range(len(rows)), gates, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("gate fidelity")
    low = min(fids) if fids else 0.0
    ax.set_ylim(max(0.0, low - 0.05), 1.005)
    fig.tight_layout()
    fig.savefig(path, dpi=200, metadata={"Software": TOOL_VERSION})
    plt.close(fig)


def write_report(
    results: list[dict],
    out_dir: str | Path,
    bootstraps: list[dict] | None = None,
    stem: str = "report",
) -> list[Path]:
    """Write the merged table as CSV + JSON and the fidelity figure.

    ``results`` are loaded result payloads; ``bootstraps`` are loaded
    bootstrap-study payloads whose error bars are matched to rows by the
    digest of the record both stages consumed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [report_row(result) for result in results]
    if bootstraps:
        attach_bootstrap(rows, bootstraps)
    csv_path = out / f"{stem}.csv"
    rows_to_csv(rows, csv_path)
    json_path = out / f"{stem}.json"
    save_json(
        json_path,
        {
            "schema": REPORT_SCHEMA,
            "tool_version": TOOL_VERSION,
            "columns": list(REPORT_COLUMNS),
            "rows": rows,
            "source_digests": sorted({row["record_digest"] for row in rows if row["record_digest"]}),
        },
    )
    figure_path = out / f"{stem}_fidelity.png"
    fidelity_figure(rows, figure_path)
    return [csv_path, json_path, figure_path]
