"""Command-line entry points.

Subcommands::

    selfdistill distill run --config cfg.txt
    selfdistill distill sweep --config cfg.txt --alphas 0,0.1,...,0.9
    selfdistill spectral report --config cfg.txt
    selfdistill constrained run --config cfg.txt --epsilon 0.5
    selfdistill selfcheck [--seed N]

Configs are flat ``key=value`` files; see the README for the key list.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .experiment import load_config, run_constrained, run_experiment, run_spectral_report
from .selfcheck import run_selfcheck


def _add_config_args(parser, with_epsilon: bool = False, with_alphas: bool = False):
    parser.add_argument("--config", required=True, type=Path, help="key=value config file")
    parser.add_argument("--out", type=Path, help="override the config's output directory")
    parser.add_argument("--plots", action="store_true", help="also render PNG plots")
    if with_alphas:
        parser.add_argument("--alphas", help="comma-separated alpha grid overriding the config")
    if with_epsilon:
        parser.add_argument("--epsilon", type=float, help="misfit budget (overrides the config)")


def _resolved_config(args):
    config = load_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.plots:
        overrides["emit_plots"] = True
    if getattr(args, "alphas", None):
        overrides["alphas"] = tuple(float(tok) for tok in args.alphas.split(",") if tok.strip())
    if getattr(args, "epsilon", None) is not None:
        overrides["epsilon"] = args.epsilon
    return dataclasses.replace(config, **overrides) if overrides else config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selfdistill",
        description="Weighted-target self-distillation of kernel ridge regression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_distill = sub.add_parser("distill", help="run distillation chains")
    distill_sub = p_distill.add_subparsers(dest="subcommand", required=True)
    _add_config_args(distill_sub.add_parser("run", help="run the configured experiment"))
    _add_config_args(
        distill_sub.add_parser("sweep", help="run the experiment over an alpha grid"),
        with_alphas=True,
    )

    p_spectral = sub.add_parser("spectral", help="shrinkage diagnostics")
    spectral_sub = p_spectral.add_subparsers(dest="subcommand", required=True)
    _add_config_args(spectral_sub.add_parser("report", help="emit shrinkage diagonals and ratios"))

    p_con = sub.add_parser("constrained", help="tolerance-constrained variant")
    con_sub = p_con.add_subparsers(dest="subcommand", required=True)
    _add_config_args(con_sub.add_parser("run", help="simulate the constrained chain"),
                     with_epsilon=True)

    p_check = sub.add_parser("selfcheck", help="run the invariant suite on random instances")
    p_check.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "selfcheck":
        return 0 if run_selfcheck(seed=args.seed) else 1

    try:
        config = _resolved_config(args)
        if args.command == "distill":
            out = run_experiment(config)
        elif args.command == "spectral":
            out = run_spectral_report(config)
        else:
            out = run_constrained(config)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
