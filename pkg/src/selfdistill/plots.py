"""PNG renderings of the experiment CSVs.

Plots are conveniences derived purely from the CSV files on disk;
nothing here feeds back into the numerical outputs.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

from matplotlib.figure import Figure

__all__ = ["render_experiment_plots"]


def _read_columns(path: Path) -> dict:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        cols = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                cols[name].append(value)
    return cols


def _grouped_series(cols: dict, xcol: str, ycol: str) -> dict:
    """Group (x, y) pairs by (alpha, step), preserving file order."""
    series = defaultdict(lambda: ([], []))
    for alpha, step, x, y in zip(cols["alpha"], cols["step"], cols[xcol], cols[ycol]):
        xs, ys = series[(alpha, int(step))]
        xs.append(float(x))
        ys.append(float(y))
    return series


def _render_per_alpha(series: dict, path: Path, xlabel: str, ylabel: str, title: str,
                      dataset: tuple | None = None, logy: bool = False) -> None:
    alphas = sorted({alpha for alpha, _ in series}, key=float)
    fig = Figure(figsize=(5.0 * len(alphas), 4.0))
    axes = fig.subplots(1, len(alphas), sharey=True, squeeze=False)[0]
    for ax, alpha in zip(axes, alphas):
        steps = sorted(step for a, step in series if a == alpha)
        for step in steps:
            xs, ys = series[(alpha, step)]
            ax.plot(xs, ys, label=f"step {step}", alpha=0.85)
        if dataset is not None:
            ax.scatter(dataset[0], dataset[1], marker="x", color="k", zorder=3, label="data")
        if logy:
            ax.set_yscale("log")
        ax.set_title(f"{title} (alpha={float(alpha):g})")
        ax.set_xlabel(xlabel)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize="small")
    axes[0].set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def render_experiment_plots(out_dir) -> list:
    """Render the available CSVs in ``out_dir`` to PNGs; returns the paths."""
    out_dir = Path(out_dir)
    written = []

    dataset = None
    ds_path = out_dir / "dataset.csv"
    if ds_path.exists():
        cols = _read_columns(ds_path)
        if "x0" in cols and len(cols) == 2:
            dataset = ([float(v) for v in cols["x0"]], [float(v) for v in cols["y"]])

    pred_path = out_dir / "predictions.csv"
    if pred_path.exists():
        series = _grouped_series(_read_columns(pred_path), "x", "f")
        path = out_dir / "predictions.png"
        _render_per_alpha(series, path, "x", "f(x)", "fitted curve per step", dataset=dataset)
        written.append(path)

    b_path = out_dir / "b_diagonal.csv"
    if b_path.exists():
        series = _grouped_series(_read_columns(b_path), "eig_index", "b")
        path = out_dir / "b_diagonal.png"
        _render_per_alpha(series, path, "eigenvalue index (ascending)", "shrinkage factor",
                          "shrinkage diagonal per step")
        written.append(path)

    r_path = out_dir / "ratios.csv"
    if r_path.exists():
        series = _grouped_series(_read_columns(r_path), "k", "r_k")
        path = out_dir / "ratios.png"
        _render_per_alpha(series, path, "k", "B[k+1] / B[k]", "consecutive shrinkage ratios",
                          logy=True)
        written.append(path)

    return written
