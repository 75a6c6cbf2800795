"""Rendering of aggregate results: score table, boxplot data, cross-IoU data.

Metrics are stored in [0, 1]; only this layer scales them to percentages,
rounding half-to-even at two decimals.
"""

from __future__ import annotations

import csv
import io
import json
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Literal

from .errors import ValidationError

_TWO_PLACES = Decimal("0.01")

TABLE_COLUMNS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("cIoU U.th", ("ciou_at_half",)),
    ("cIoU Adap.", ("ciou_adap_at_half",)),
    ("AUC U.th", ("auc",)),
    ("AUC Adap.", ("auc_adap",)),
    ("pIA (silence)", ("silence", "mean_pia")),
    ("AUC_N (silence)", ("silence", "auc_n")),
    ("pIA (noise)", ("noise", "mean_pia")),
    ("AUC_N (noise)", ("noise", "auc_n")),
    ("pIA (offscreen)", ("offscreen", "mean_pia")),
    ("AUC_N (offscreen)", ("offscreen", "auc_n")),
    ("F_LOC", ("f_loc",)),
    ("F_AUC", ("f_auc",)),
)


def format_percent(value: float) -> str:
    """value * 100 with two decimals, round half-to-even, e.g. 0.18666 -> 18.67."""
    return str((Decimal(value) * 100).quantize(_TWO_PLACES, rounding=ROUND_HALF_EVEN))


def load_summary(path: str | Path) -> dict:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            summary = json.load(fh)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: invalid JSON: {e.msg}") from e
    if not isinstance(summary, dict) or "models" not in summary:
        raise ValidationError(f"{path}: not an evaluation summary")
    return summary


def _lookup(metrics: dict, path: tuple[str, ...]) -> float:
    node = metrics
    for key in path:
        node = node[key]
    return node


def table_rows(summary: dict) -> tuple[list[str], list[list[str]]]:
    """Header and body cells of the score table, percentages as strings.

    Mean columns come first in the Table-1 order, then the same columns
    suffixed with 'std' carrying the across-seed standard deviations.
    """
    header = ["Dataset", "Model"]
    header += [name for name, _ in TABLE_COLUMNS]
    header += [f"{name} std" for name, _ in TABLE_COLUMNS]
    body = []
    for model_id, entry in summary["models"].items():
        row = [summary["dataset_id"], model_id]
        row += [format_percent(_lookup(entry["mean"], path)) for _, path in TABLE_COLUMNS]
        row += [format_percent(_lookup(entry["std"], path)) for _, path in TABLE_COLUMNS]
        body.append(row)
    return header, body


def render_table(summary: dict, fmt: Literal["markdown", "csv"] = "markdown") -> str:
    header, body = table_rows(summary)
    if fmt == "csv":
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(body)
        return buf.getvalue()
    if fmt != "markdown":
        raise ValidationError(f"unknown table format {fmt!r}")
    widths = [max(len(header[i]), *(len(row[i]) for row in body)) if body else len(header[i]) for i in range(len(header))]
    lines = [
        "| " + " | ".join(cell.ljust(widths[i]) for i, cell in enumerate(header)) + " |",
        "|" + "|".join("-" * (widths[i] + 2) for i in range(len(header))) + "|",
    ]
    for row in body:
        lines.append("| " + " | ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) + " |")
    return "\n".join(lines) + "\n"


def export_cross_iou(summary: dict) -> list[dict]:
    """Plot-ready per-model means of the four localization-map IoU pairs."""
    return [
        {"model": model_id, **entry["cross_iou_mean"]}
        for model_id, entry in summary["models"].items()
    ]


def export_boxplot(summary: dict) -> list[dict]:
    """Plot-ready max-similarity distribution summaries per (model, audio type)."""
    rows = []
    for model_id, entry in summary["models"].items():
        for audio_type, stats in entry["max_sim_stats"].items():
            rows.append({"model": model_id, "audio_type": audio_type, **stats})
    return rows
