"""Plot-data emission for reconstructed transfer matrices.

Every render call writes plain data files (CSV grid, JSON bar vectors) next
to the figures so the matrices can be replotted with any tool.  The SVG
heatmap is generated directly — a self-contained file with no font or
script dependencies — while the PNG goes through matplotlib.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .pauli import pauli_labels
from .serialize import TOOL_VERSION, save_json, transfer_matrix_csv

RENDER_SCHEMA = "qpt-render/1"

_CELL = 26  # SVG cell edge, px
_MARGIN = 46  # SVG label gutter, px


def _diverging_rgb(value: float) -> tuple[int, int, int]:
    """Map [-1, 1] onto a blue-white-red diverging scale."""
    v = float(np.clip(value, -1.0, 1.0))
    if v >= 0:
        fade = int(round(255 * (1 - v)))
        return (255, fade, fade)
    fade = int(round(255 * (1 + v)))
    return (fade, fade, 255)


def heatmap_svg(r: np.ndarray, n_qubits: int, path: str | Path, source_digest: str = "") -> None:
    """Write a self-contained SVG heatmap of a transfer matrix."""
    r = np.asarray(r, dtype=float)
    labels = pauli_labels(n_qubits)
    n = len(labels)
    size = _MARGIN + n * _CELL
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f"<desc>transfer-matrix heatmap | {TOOL_VERSION}"
        + (f" | source {source_digest}" if source_digest else "")
        + "</desc>",
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for i in range(n):
        for j in range(n):
            red, green, blue = _diverging_rgb(r[i, j])
            x = _MARGIN + j * _CELL
            y = _MARGIN + i * _CELL
            parts.append(
                f'<rect x="{x}" y="{y}" width="{_CELL}" height="{_CELL}" '
                f'fill="rgb({red},{green},{blue})" stroke="#999" stroke-width="0.5"/>'
            )
    style = 'font-family="monospace" font-size="9"'
    for k, label in enumerate(labels):
        cx = _MARGIN + k * _CELL + _CELL // 2
        parts.append(
            f'<text x="{cx}" y="{_MARGIN - 6}" text-anchor="middle" {style}>{label}</text>'
        )
        cy = _MARGIN + k * _CELL + _CELL // 2 + 3
        parts.append(
            f'<text x="{_MARGIN - 6}" y="{cy}" text-anchor="end" {style}>{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def heatmap_png(
    r: np.ndarray,
    n_qubits: int,
    path: str | Path,
    title: str = "",
    source_digest: str = "",
) -> None:
    """Render a transfer matrix as a PNG heatmap with Pauli tick labels."""
    r = np.asarray(r, dtype=float)
    labels = pauli_labels(n_qubits)
    n = len(labels)
    fig, ax = plt.subplots(figsize=(0.45 * n + 1.8, 0.45 * n + 1.4))
    image = ax.imshow(r, cmap="RdBu_r", vmin=-1.0, vmax=1.0)
    ax.set_xticks(range(n), labels, fontsize=7, rotation=90 if n > 4 else 0)
    ax.set_yticks(range(n), labels, fontsize=7)
    ax.set_xlabel("input Pauli")
    ax.set_ylabel("output Pauli")
    if title:
        ax.set_title(title, fontsize=10)
    fig.colorbar(image, ax=ax, fraction=0.046, pad=0.04)
    fig.tight_layout()
    fig.savefig(
        path, dpi=200, metadata={"Software": TOOL_VERSION, "Description": source_digest}
    )
    plt.close(fig)


def bar_data(r: np.ndarray, n_qubits: int, source_digest: str = "") -> dict:
    """Per-cell bar vectors for external 3D bar or city-scape plots."""
    r = np.asarray(r, dtype=float)
    labels = pauli_labels(n_qubits)
    bars = []
    for i, row_label in enumerate(labels):
        for j, col_label in enumerate(labels):
            bars.append(
                {
                    "row": i,
                    "col": j,
                    "row_label": row_label,
                    "col_label": col_label,
                    "value": float(r[i, j]),
                }
            )
    return {
        "schema": RENDER_SCHEMA,
        "tool_version": TOOL_VERSION,
        "source_digest": source_digest,
        "labels": list(labels),
        "bars": bars,
    }


def render_transfer_matrix(
    r: np.ndarray,
    n_qubits: int,
    out_dir: str | Path,
    stem: str,
    title: str = "",
    source_digest: str = "",
) -> list[Path]:
    """Emit grid CSV, bar JSON, SVG and PNG for one matrix; return the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = out / f"{stem}_grid.csv"
    comment = TOOL_VERSION + (f" source={source_digest}" if source_digest else "")
    transfer_matrix_csv(r, n_qubits, grid, comment=comment)
    bars = out / f"{stem}_bars.json"
    save_json(bars, bar_data(r, n_qubits, source_digest))
    svg = out / f"{stem}_heatmap.svg"
    heatmap_svg(r, n_qubits, svg, source_digest)
    png = out / f"{stem}_heatmap.png"
    heatmap_png(r, n_qubits, png, title=title, source_digest=source_digest)
    return [grid, bars, svg, png]
