"""Experiment runner: configs, chains, and the CSV artifact contract.

A run takes a flat ``key=value`` config, executes one distillation
chain per requested ground-truth weight on a shared dataset, and writes
the results as CSV tables (prediction curves, per-step training
targets, shrinkage diagonals, consecutive-ratio tables).  Plots, when
requested, are rendered purely from the CSVs, so they can never change
the numbers.

All floats are serialized with 17 significant digits (lossless for
float64), UTF-8, LF line endings.  Identical config and seed produce
byte-identical files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constrained import ConstrainedConfig, run_constrained_chain
from .datasets import Dataset, generate_sine
from .distill import DistillConfig, run_chain
from .kernels import KernelSpec, gram_matrix
from .krr import predict
from .linalg import eig_sym
from .spectral import SpectralState, rk_ratios

__all__ = [
    "SineSpec",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "read_dataset_csv",
    "write_dataset_csv",
    "run_experiment",
    "run_spectral_report",
    "run_constrained",
]

GRID_LO = -0.05
GRID_HI = 1.05

_KNOWN_KEYS = {
    "kernel.type",
    "kernel.gamma",
    "kernel.degree",
    "kernel.offset",
    "lambda",
    "alpha",
    "steps",
    "tol",
    "data.n",
    "data.sigma",
    "data.seed",
    "data.csv",
    "grid.points",
    "emit_plots",
    "epsilon",
    "out",
}


@dataclass(frozen=True)
class SineSpec:
    """Synthetic sine dataset parameters; the seed is mandatory."""

    n: int
    sigma: float
    seed: int


@dataclass
class ExperimentConfig:
    kernel: KernelSpec
    lam: float
    alphas: tuple
    steps: int
    data: SineSpec | Path
    out_dir: Path
    emit_plots: bool = False
    grid_points: int = 201
    convergence_tol: float = 1e-10
    epsilon: float | None = None

    def __post_init__(self):
        if len(self.alphas) == 0:
            raise ValueError("alpha list must be nonempty")
        for a in self.alphas:
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"alpha values must be in [0, 1], got {a}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.grid_points < 2:
            raise ValueError(f"grid.points must be >= 2, got {self.grid_points}")


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"config key {key} expects a boolean, got {raw!r}")


def parse_config(text: str, *, base_dir: Path | None = None) -> ExperimentConfig:
    """Parse a flat ``key=value`` config (``#`` starts a comment line).

    Relative paths (``data.csv``, ``out``) are resolved against
    ``base_dir`` when given.
    """
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno} is not key=value: {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ValueError(f"unknown config key {key!r} on line {lineno}")
        if key in pairs:
            raise ValueError(f"duplicate config key {key!r} on line {lineno}")
        pairs[key] = value.strip()

    def resolve(p: str) -> Path:
        path = Path(p)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return path

    kind = pairs.get("kernel.type", "rbf").lower()
    if kind == "rbf":
        if "kernel.gamma" not in pairs:
            raise ValueError("kernel.type=rbf requires kernel.gamma")
        kernel = KernelSpec.rbf(float(pairs["kernel.gamma"]))
    elif kind == "linear":
        kernel = KernelSpec.linear()
    elif kind == "polynomial":
        if "kernel.degree" not in pairs:
            raise ValueError("kernel.type=polynomial requires kernel.degree")
        kernel = KernelSpec.polynomial(
            int(pairs["kernel.degree"]), float(pairs.get("kernel.offset", "0"))
        )
    else:
        raise ValueError(f"unknown kernel.type {kind!r}")

    if "alpha" not in pairs:
        raise ValueError("config requires alpha (comma-separated list)")
    alphas = tuple(float(tok) for tok in pairs["alpha"].split(",") if tok.strip() != "")

    if "data.csv" in pairs:
        if any(k in pairs for k in ("data.n", "data.sigma", "data.seed")):
            raise ValueError("give either data.csv or data.n/data.sigma/data.seed, not both")
        data = resolve(pairs["data.csv"])
    else:
        for k in ("data.n", "data.sigma", "data.seed"):
            if k not in pairs:
                raise ValueError(f"synthetic data requires {k} (the seed is not optional)")
        data = SineSpec(
            n=int(pairs["data.n"]),
            sigma=float(pairs["data.sigma"]),
            seed=int(pairs["data.seed"]),
        )

    if "lambda" not in pairs:
        raise ValueError("config requires lambda")
    if "steps" not in pairs:
        raise ValueError("config requires steps")
    if "out" not in pairs:
        raise ValueError("config requires out")

    return ExperimentConfig(
        kernel=kernel,
        lam=float(pairs["lambda"]),
        alphas=alphas,
        steps=int(pairs["steps"]),
        data=data,
        out_dir=resolve(pairs["out"]),
        emit_plots=_parse_bool(pairs["emit_plots"], "emit_plots") if "emit_plots" in pairs else False,
        grid_points=int(pairs.get("grid.points", "201")),
        convergence_tol=float(pairs.get("tol", "1e-10")),
        epsilon=float(pairs["epsilon"]) if "epsilon" in pairs else None,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    """Serialize a float with 17 significant digits (round-trips float64)."""
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_dataset_csv(path, dataset: Dataset) -> None:
    """Write a dataset as ``x0..x{d-1},y`` rows (lossless float format)."""
    header = [f"x{j}" for j in range(dataset.d)] + ["y"]
    rows = [
        [_fmt(v) for v in dataset.X[i]] + [_fmt(dataset.y[i])]
        for i in range(dataset.n)
    ]
    _write_csv(Path(path), header, rows)


def read_dataset_csv(path) -> Dataset:
    """Read a dataset written by :func:`write_dataset_csv`.

    Raises
    ------
    ValueError
        If the header is not ``x0..x{d-1},y`` or a row has the wrong
        number of fields.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty dataset file") from None
        d = len(header) - 1
        expected = [f"x{j}" for j in range(d)] + ["y"]
        if d < 1 or header != expected:
            raise ValueError(f"{path}: invalid dataset header {header!r}")
        X_rows, y_vals = [], []
        for i, row in enumerate(reader, start=2):
            if len(row) != d + 1:
                raise ValueError(f"{path}: line {i} has {len(row)} fields, expected {d + 1}")
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise ValueError(f"{path}: line {i} has a non-numeric field") from None
            X_rows.append(values[:d])
            y_vals.append(values[d])
    if not X_rows:
        raise ValueError(f"{path}: dataset has no rows")
    return Dataset(X=np.array(X_rows), y=np.array(y_vals))


def _load_dataset(config: ExperimentConfig) -> Dataset:
    if isinstance(config.data, SineSpec):
        return generate_sine(config.data.n, config.data.sigma, config.data.seed)
    return read_dataset_csv(config.data)


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------

@dataclass
class _AlphaResult:
    alpha: float
    chain: object
    b_history: list = field(default_factory=list)
    curves: list = field(default_factory=list)  # one prediction vector per step


def _run_chains(config: ExperimentConfig, dataset: Dataset, *, with_curves: bool):
    K = gram_matrix(config.kernel, dataset.X)
    decomp = eig_sym(K)
    grid = None
    if with_curves and dataset.d == 1:
        grid = np.linspace(GRID_LO, GRID_HI, config.grid_points)[:, None]

    results = []
    for alpha in config.alphas:
        chain = run_chain(
            K,
            dataset.y,
            DistillConfig(alpha, config.lam, config.steps, config.convergence_tol),
            inputs=dataset.X,
            kernel=config.kernel,
        )
        state = SpectralState.create(decomp, alpha, config.lam)
        state.advance(config.steps)
        res = _AlphaResult(alpha=alpha, chain=chain, b_history=state.b_history)
        if grid is not None:
            res.curves = [predict(fit, grid) for fit in chain.fits]
        results.append(res)
    return decomp, grid, results


def _write_train_targets(out_dir: Path, results) -> None:
    rows = []
    for res in results:
        a = _fmt(res.alpha)
        for step, y_tau in enumerate(res.chain.predictions):
            rows.extend(
                [str(step), a, str(i), _fmt(v)] for i, v in enumerate(y_tau)
            )
    _write_csv(out_dir / "train_targets.csv", ["step", "alpha", "index", "y_tau"], rows)


def _write_b_diagonal(out_dir: Path, decomp, results) -> None:
    rows = []
    d_strs = [_fmt(v) for v in decomp.eigenvalues]
    for res in results:
        a = _fmt(res.alpha)
        for step in range(1, len(res.b_history)):
            b = res.b_history[step]
            rows.extend(
                [str(step), a, str(i), d_strs[i], _fmt(b[i])] for i in range(len(b))
            )
    _write_csv(
        out_dir / "b_diagonal.csv", ["step", "alpha", "eig_index", "d", "b"], rows
    )


def _write_ratios(out_dir: Path, results) -> None:
    rows = []
    for res in results:
        a = _fmt(res.alpha)
        for step in range(1, len(res.b_history)):
            r = rk_ratios(res.b_history[step])
            rows.extend(
                [str(step), a, str(k + 1), _fmt(r[k])] for k in range(len(r))
            )
    _write_csv(out_dir / "ratios.csv", ["step", "alpha", "k", "r_k"], rows)


def run_experiment(config: ExperimentConfig) -> Path:
    """Run the full experiment and write its artifact directory.

    Emits ``dataset.csv``, ``predictions.csv`` (for 1-d inputs),
    ``train_targets.csv``, ``b_diagonal.csv`` and ``ratios.csv``; with
    ``emit_plots`` also PNG renderings of the three diagnostic figures.
    Returns the output directory.
    """
    dataset = _load_dataset(config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    decomp, grid, results = _run_chains(config, dataset, with_curves=True)

    write_dataset_csv(out_dir / "dataset.csv", dataset)
    if grid is not None:
        rows = []
        grid_strs = [_fmt(v) for v in grid[:, 0]]
        for res in results:
            a = _fmt(res.alpha)
            for step, curve in enumerate(res.curves, start=1):
                rows.extend(
                    [str(step), a, grid_strs[i], _fmt(curve[i])]
                    for i in range(len(curve))
                )
        _write_csv(out_dir / "predictions.csv", ["step", "alpha", "x", "f"], rows)
    _write_train_targets(out_dir, results)
    _write_b_diagonal(out_dir, decomp, results)
    _write_ratios(out_dir, results)

    if config.emit_plots:
        from .plots import render_experiment_plots

        render_experiment_plots(out_dir)
    return out_dir


def run_spectral_report(config: ExperimentConfig) -> Path:
    """Emit only the spectral diagnostics (shrinkage diagonals, ratios)."""
    dataset = _load_dataset(config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    decomp, _, results = _run_chains(config, dataset, with_curves=False)
    write_dataset_csv(out_dir / "dataset.csv", dataset)
    _write_b_diagonal(out_dir, decomp, results)
    _write_ratios(out_dir, results)

    if config.emit_plots:
        from .plots import render_experiment_plots

        render_experiment_plots(out_dir)
    return out_dir


def run_constrained(config: ExperimentConfig) -> Path:
    """Run the constrained chain and write ``constrained.csv``.

    The constrained problem uses the Gram matrix scaled by ``1/n`` as
    its smoothness matrix and requires a single interior ground-truth
    weight and a positive ``epsilon``.  An infeasible budget mid-chain
    is surfaced as a final row with regime ``Infeasible`` rather than a
    crash.
    """
    if config.epsilon is None:
        raise ValueError("constrained runs require epsilon in the config or on the command line")
    if len(config.alphas) != 1:
        raise ValueError("constrained runs take exactly one alpha")
    alpha = config.alphas[0]

    dataset = _load_dataset(config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_dataset_csv(out_dir / "dataset.csv", dataset)

    K = gram_matrix(config.kernel, dataset.X)
    chain = run_constrained_chain(
        ConstrainedConfig(eps=config.epsilon, alpha=alpha, G=K / dataset.n, y=dataset.y),
        config.steps,
    )

    regime = chain.classification.regime.value
    rows = []
    for step in range(1, len(chain.predictions)):
        y_tau = chain.predictions[step]
        rows.append(
            [
                str(step),
                _fmt(chain.multipliers[step - 1]),
                _fmt(float(np.linalg.norm(y_tau))),
                _fmt(chain.misfits[step - 1]),
                regime,
            ]
        )
    if chain.infeasible_at is not None:
        rows.append(
            [
                str(chain.infeasible_at),
                "nan",
                "nan",
                _fmt(chain.infeasible_floor),
                "Infeasible",
            ]
        )
    _write_csv(
        out_dir / "constrained.csv",
        ["step", "lambda_tau", "y_norm", "constraint_value", "regime"],
        rows,
    )

    eps_b, upper_b, t = chain.classification.boundary_values
    report = [
        f"regime={regime}",
        f"epsilon={_fmt(eps_b)}",
        f"epsilon_over_alpha={_fmt(upper_b)}",
        f"target_norm2_over_n={_fmt(t)}",
        f"near_boundary={str(chain.classification.near_boundary).lower()}",
    ]
    (out_dir / "constrained_report.txt").write_text("\n".join(report) + "\n", encoding="utf-8")
    return out_dir
