"""Report writers: JSON, CSV, aligned text tables, and figures.

Every writer lands atomically (temp file, then rename) and emits
byte-stable output for a fixed input, so seeded reruns can be compared
with a plain file diff. Figures render through the Agg backend straight
to PNG files next to the delimited reports.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def write_json(path: str | Path, payload) -> None:
    write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    tmp.replace(path)


def render_table(header: Sequence[str], rows: Sequence[Sequence], title: str = "") -> str:
    """Right-aligned monospace table for terminal-friendly stats blocks."""
    cells = [[str(item) for item in row] for row in rows]
    columns = [list(column) for column in zip(*([list(header)] + cells))]
    widths = [max(len(item) for item in column) for column in columns]
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(item.rjust(w) for item, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def _save_figure(fig, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    # strip the library stamp so identical runs produce identical bytes
    fig.savefig(tmp, format="png", dpi=100, metadata={"Software": None})
    plt.close(fig)
    os.replace(tmp, path)


def plot_training_curves(history: Sequence[dict], path: str | Path) -> None:
    epochs = [row["epoch"] for row in history]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [row["train_loss"] for row in history], marker="o", label="train loss")
    ax.plot(epochs, [row["val_loss"] for row in history], marker="s", label="val loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("weighted BCE")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save_figure(fig, path)


def plot_class_weight_schedule(history: Sequence[dict], path: str | Path) -> None:
    epochs = [row["epoch"] for row in history]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [row["lambda_pos"] for row in history], marker="o", label="positive weight")
    ax.plot(epochs, [row["tau"] for row in history], marker="s", label="predicted-positive rate")
    ax.set_xlabel("epoch")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save_figure(fig, path)


def plot_edge_shares(edge_means: dict[str, float], path: str | Path) -> None:
    names = list(edge_means)
    values = [edge_means[name] for name in names]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, values)
    ax.set_ylabel("mean edges per document")
    fig.tight_layout()
    _save_figure(fig, path)


def plot_score_histogram(scores: Sequence[float], path: str | Path, label: str = "R-1 F1") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(list(scores), bins=20, range=(0.0, 1.0), edgecolor="black")
    ax.set_xlabel(label)
    ax.set_ylabel("documents")
    fig.tight_layout()
    _save_figure(fig, path)


def plot_ablation(rows: Sequence[dict], path: str | Path) -> None:
    names = [row["variant"] for row in rows]
    values = [row["rouge1_f1"] for row in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, values)
    ax.set_ylabel("R-1 F1")
    ax.set_ylim(0.0, max(values + [0.01]) * 1.15)
    fig.tight_layout()
    _save_figure(fig, path)


def plot_calibration(rows: Sequence[dict], target: float, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    by_ww: dict[float, list[tuple[float, float]]] = {}
    for row in rows:
        by_ww.setdefault(row["t_ww"], []).append((row["t_ss"], row["ws_share"]))
    for t_ww in sorted(by_ww):
        points = sorted(by_ww[t_ww])
        ax.plot(
            [p[0] for p in points],
            [p[1] for p in points],
            marker="o",
            label=f"word threshold {t_ww}",
        )
    ax.axhline(target, color="gray", linestyle="--", label="target share")
    ax.set_xlabel("sentence similarity threshold")
    ax.set_ylabel("word-sentence edge share")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save_figure(fig, path)
