"""Plot-ready CSV tables and rendered figures.

Every report artifact is written deterministically: CSV floats use
repr round-tripping and PNG metadata is pinned, so re-running a seeded
experiment reproduces each file byte for byte.

Files per evaluation:

* ``mse_<label>_<regime>.csv``        -- t, pooled, one column per channel (raw units)
* ``calibration_<label>_<regime>.csv``-- t, coverage
* ``pop_avg_<channel>_<regime>.csv``  -- t, estimated, true
* ``effect_<channel>.csv``            -- t, estimated, true
* matching ``.png`` figures rendered alongside each table
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import EvaluationError, MetricTable

PNG_METADATA = {"Software": "cfsim"}


def _write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _save_figure(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, metadata=PNG_METADATA)
    plt.close(fig)
    return path


def write_mse(table: MetricTable, out_dir: Path, label: str) -> list[Path]:
    if table.per_time_mse.size == 0:
        raise EvaluationError("empty metric table")
    channels = table.channel_subset
    rows = []
    for k, t in enumerate(table.times):
        rows.append([int(t), float(table.per_time_mse[k])])
    paths = [
        _write_csv(out_dir / f"mse_{label}_{table.regime}.csv", ["t", "pooled_mse_z"], rows)
    ]
    rows = [[name, float(table.per_channel_mse_raw[name])] for name in channels]
    paths.append(
        _write_csv(out_dir / f"mse_channels_{label}_{table.regime}.csv", ["channel", "mse_raw"], rows)
    )
    return paths


def write_calibration(
    times: np.ndarray, coverage: np.ndarray, pooled: float, alphas, out_dir: Path,
    label: str, regime: str,
) -> Path:
    rows = [[int(t), float(c)] for t, c in zip(times, coverage)]
    rows.append(["pooled", float(pooled)])
    return _write_csv(
        out_dir / f"calibration_{label}_{regime}.csv", ["t", "coverage"], rows
    )


def write_curve(
    times: np.ndarray, estimated: np.ndarray, true: np.ndarray | None, out_dir: Path, stem: str
) -> Path:
    rows = []
    for k, t in enumerate(times):
        row = [int(t), float(estimated[k])]
        if true is not None:
            row.append(float(true[k]))
        rows.append(row)
    header = ["t", "estimated"] + (["true"] if true is not None else [])
    return _write_csv(out_dir / f"{stem}.csv", header, rows)


def plot_mse_curves(
    tables: dict[str, MetricTable], out_dir: Path, regime: str
) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for label, table in sorted(tables.items()):
        ax.plot(table.times, table.per_time_mse, marker=".", label=label)
    ax.set_xlabel("time step")
    ax.set_ylabel("pooled MSE (z-scored)")
    ax.set_title(f"counterfactual MSE over time ({regime})")
    ax.legend()
    fig.tight_layout()
    return _save_figure(fig, out_dir / f"mse_{regime}.png")


def plot_calibration_curves(
    curves: dict[str, tuple[np.ndarray, np.ndarray]], nominal: float, out_dir: Path, regime: str
) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for label, (times, coverage) in sorted(curves.items()):
        ax.plot(times, coverage, marker=".", label=label)
    ax.axhline(nominal, color="black", linestyle="--", linewidth=1, label=f"nominal {nominal:.2f}")
    ax.set_xlabel("time step")
    ax.set_ylabel("coverage")
    ax.set_ylim(0.0, 1.0)
    ax.set_title(f"calibration over time ({regime})")
    ax.legend()
    fig.tight_layout()
    return _save_figure(fig, out_dir / f"calibration_{regime}.png")


def plot_curve_pair(
    times: np.ndarray, estimated: np.ndarray, true: np.ndarray | None, out_dir: Path,
    stem: str, ylabel: str, title: str,
) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(times, estimated, marker=".", label="estimated")
    if true is not None:
        ax.plot(times, true, marker="x", linestyle="--", label="true")
    ax.set_xlabel("time step")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    return _save_figure(fig, out_dir / f"{stem}.png")


def plot_patient_draws(result, channel_idx: int, truth_rows: np.ndarray, out_dir: Path, stem: str) -> Path:
    """Spaghetti plot: every Monte-Carlo draw, the point prediction and
    the realized trajectory for one patient and channel."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for k in range(result.n_draws):
        ax.plot(result.times, result.draws[k, :, channel_idx], color="C0", alpha=0.08, linewidth=0.7)
    ax.plot(result.times, result.point[:, channel_idx], color="C0", linewidth=2, label="point prediction")
    ax.plot(result.times, truth_rows, color="C3", linewidth=2, label="ground truth")
    ax.set_xlabel("time step")
    ax.set_ylabel(result.channels[channel_idx])
    ax.set_title(f"patient {result.patient_id}: simulated draws")
    ax.legend()
    fig.tight_layout()
    return _save_figure(fig, out_dir / f"{stem}.png")
