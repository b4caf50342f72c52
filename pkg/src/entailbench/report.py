"""Report rendering: delimited summaries, plot-data CSV, and
precision-recall figures written to files."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

from .metrics import AucReport


def load_result_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf8"))


def summary_rows(results: dict[str, dict]) -> list[dict]:
    rows = []
    for name in sorted(results):
        payload = results[name]
        report = payload.get("report") or {}
        rows.append(
            {
                "name": name,
                "scorer": payload.get("scorer", ""),
                "xi": report.get("xi"),
                "auc_xi": report.get("auc_xi"),
                "auc_norm": report.get("auc_norm"),
                "auc_50": report.get("auc_50"),
                "coverage": payload.get("coverage"),
            }
        )
    return rows


def write_summary_csv(results: dict[str, dict], path: str | Path) -> None:
    rows = summary_rows(results)
    fieldnames = ["name", "scorer", "xi", "auc_xi", "auc_norm", "auc_50", "coverage"]
    with open(path, "w", newline="", encoding="utf8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def write_curve_csv(report: AucReport | dict, path: str | Path) -> None:
    """Plot-data CSV: one (recall, precision) row per curve point."""
    points = (
        report.curve.points
        if isinstance(report, AucReport)
        else report.get("curve", [])
    )
    with open(path, "w", newline="", encoding="utf8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["recall", "precision"])
        for r, p in points:
            writer.writerow([r, p])


def render_table(results: dict[str, dict]) -> str:
    header = f"{'name':<24} {'xi':>7} {'auc_norm':>9} {'auc_50':>7} {'coverage':>9}"
    lines = [header, "-" * len(header)]
    for row in summary_rows(results):
        def fmt(value: Optional[float]) -> str:
            return "-" if value is None else f"{value:.4f}"

        lines.append(
            f"{row['name']:<24} {fmt(row['xi']):>7} {fmt(row['auc_norm']):>9} "
            f"{fmt(row['auc_50']):>7} {fmt(row['coverage']):>9}"
        )
    return "\n".join(lines)


def plot_pr_curves(
    results: dict[str, dict],
    path: str | Path,
    title: str = "Precision-recall",
) -> None:
    """Render every result's PR curve into one figure file.

    The random-baseline precision of the first curve is drawn as a
    dashed floor for reference.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    xi: Optional[float] = None
    for name in sorted(results):
        report = results[name].get("report") or {}
        points = report.get("curve") or []
        if not points:
            continue
        recalls = [r for r, _ in points]
        precisions = [p for _, p in points]
        ax.plot(recalls, precisions, marker=".", markersize=3, label=name)
        if xi is None and report.get("xi") is not None:
            xi = float(report["xi"])
    if xi is not None:
        ax.axhline(xi, linestyle="--", linewidth=0.8, color="grey",
                   label=f"random ({xi:.2f})")
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.05)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
