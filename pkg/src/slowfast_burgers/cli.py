"""Command line interface.

Subcommands: simulate, fbar, strong-rate, weak-rate, khasminskii,
check-conditions.  Every experiment emits one CSV (rows of the rate report)
plus a JSON metadata sidecar into --out; `simulate` writes the trajectory
snapshots as CSV.  The worker count defaults to $SLOWFAST_BURGERS_THREADS
and is overridden by --threads.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .averaging import FbarEstimator, estimate_fbar
from .config import load_experiment
from .dynamics import simulate_slow_fast, write_trajectory_csv
from .harness import (
    check_all_conditions,
    run_khasminskii_diagnostic,
    run_strong_error,
    run_weak_error,
)
from .noise import RngStream
from .spectral import SpectralField


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="YAML experiment configuration")
    p.add_argument("--seed", type=int, default=None, help="override the base seed (u64)")
    p.add_argument("--threads", type=int, default=None, help="replica worker count")
    p.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="slowfast-burgers",
        description="Spectral Galerkin laboratory for the slow-fast stochastic Burgers system",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, hlp in (
        ("simulate", "integrate one coupled trajectory and export snapshots"),
        ("fbar", "estimate the averaged drift at the configured x0"),
        ("strong-rate", "pathwise error vs eps under shared noise (trend verdict)"),
        ("weak-rate", "weak error vs eps with slope fit (requires Q1 = 0)"),
        ("khasminskii", "auxiliary block error vs delta at fixed eps"),
        ("check-conditions", "run the standing-condition diagnostics and report"),
    ):
        p = sub.add_parser(name, help=hlp)
        _add_common(p)
        if name == "simulate":
            p.add_argument("--eps", type=float, default=None, help="time-scale ratio override")
        if name == "fbar":
            p.add_argument(
                "--mode", choices=("analytic", "time_average"), default="time_average"
            )
        if name == "weak-rate":
            p.add_argument(
                "--unsupported",
                action="store_true",
                help="allow an exploratory Q1 != 0 weak run (no acceptance claim)",
            )
    return ap


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_out(report, out: Path, stem: str) -> None:
    report.write_csv(out / f"{stem}.csv")
    report.write_json(out / f"{stem}.json")
    print(f"{report.label}: verdict={report.verdict}", end="")
    if report.fit is not None:
        print(f" slope={report.fit.slope:.4f} ci=({report.fit.ci[0]:.4f}, {report.fit.ci[1]:.4f})", end="")
    print(f" [{out / (stem + '.csv')}]")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_experiment(args.config, seed_override=args.seed, threads_override=args.threads)
    out = _outdir(args)

    if args.command == "simulate":
        eps = args.eps if args.eps is not None else cfg.eps_grid[0]
        traj = simulate_slow_fast(
            SpectralField(cfg.x0),
            SpectralField(cfg.y0),
            eps,
            cfg.pair,
            cfg.effective_q1(),
            cfg.q2,
            cfg.stepper,
            rng_q1=RngStream(cfg.seed, 0, "q1"),
            rng_q2=RngStream(cfg.seed, 0, "q2"),
            burgers=cfg.burgers,
        )
        path = out / "trajectory.csv"
        write_trajectory_csv(traj, path)
        print(f"simulate: eps={eps} steps={len(traj.times) - 1} [{path}]")
        return 0

    if args.command == "fbar":
        est = FbarEstimator(cfg.pair, cfg.q2, cfg.stepper, mode=args.mode)
        result = estimate_fbar(est, SpectralField(cfg.x0), RngStream(cfg.seed, 0, "aux"))
        coeffs = ", ".join(format(v, ".10g") for v in result.value.coeffs)
        print(f"fbar({args.mode}): [{coeffs}] stderr={result.stderr:.4g}")
        return 0

    if args.command == "check-conditions":
        report = check_all_conditions(cfg)
        print(report)
        return 0 if report.all_ok else 1

    if args.command == "strong-rate":
        report = run_strong_error(cfg)
    elif args.command == "weak-rate":
        report = run_weak_error(cfg, allow_q1=args.unsupported)
    else:
        report = run_khasminskii_diagnostic(cfg)
    _report_out(report, out, report.label)
    return 0


if __name__ == "__main__":
    sys.exit(main())
