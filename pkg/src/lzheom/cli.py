"""Command-line entry point.

Exit codes: 0 success, 1 invalid input (configuration, grid, preset name),
2 numerical failure (blow-up, non-convergence, failed oracle or preset check).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments
from .config import SWEEP_AXES, ConfigError, RunConfig, parse_config, parse_grid
from .heom import ConvergenceError, NumericalFailure
from .presets import PRESETS, gnuplot_script, run_preset

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2

logger = logging.getLogger("lzheom")


def _load(path: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def _with_tol(cfg: RunConfig, tol):
    return replace(cfg, converge_tol=tol) if tol is not None else cfg


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, default=str))


def _report_preset(name, out, tol, jobs, gnuplot, check) -> int:
    result = run_preset(name, out=out, converge_tol=tol, jobs=jobs)
    all_ok = True
    for description, ok, detail in result.check():
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {description}  [{detail}]")
    for p in result.paths:
        print(f"wrote {p}")
    if gnuplot and out is not None:
        script = Path(out) / f"{name}.gp"
        script.write_text(gnuplot_script(result))
        print(f"wrote {script}")
    return EXIT_NUMERICAL if (check and not all_ok) else EXIT_OK


def cmd_run(args) -> int:
    cfg = _with_tol(_load(args.config), args.tol)
    if cfg.preset is not None:
        out = args.out or cfg.out or "."
        return _report_preset(cfg.preset, out, args.tol, 1, False, False)
    for p in experiments.run(cfg, out=args.out):
        print(f"wrote {p}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _with_tol(_load(args.config), args.tol)
    grid = parse_grid(args.grid)
    path = experiments.sweep(cfg, args.axis, grid, out=args.out, jobs=args.jobs)
    failed = [r for r in experiments.read_sweep_csv(path) if r["status"] != "ok"]
    print(f"wrote {path} ({len(grid)} rows, {len(failed)} failed)")
    return EXIT_OK


def cmd_preset(args) -> int:
    return _report_preset(args.name, args.out, args.tol, args.jobs, args.gnuplot, args.check)


def cmd_oracle_check(args) -> int:
    cfg = _load(args.config)
    report = experiments.oracle_check(cfg, tol=args.threshold, converge_tol=args.tol)
    summary = {k: v for k, v in report.items() if not k.endswith("_trace")}
    summary["heom_final_fidelity"] = report["heom_trace"].final_fidelity
    summary["pseudomode_final_fidelity"] = report["pseudomode_trace"].final_fidelity
    _emit(summary)
    if args.out:
        experiments.write_trace_csv(Path(args.out) / "oracle_heom.csv", report["heom_trace"])
        experiments.write_trace_csv(Path(args.out) / "oracle_pseudomode.csv",
                                    report["pseudomode_trace"])
    return EXIT_OK if report["status"] == "pass" else EXIT_NUMERICAL


def cmd_converge(args) -> int:
    cfg = _load(args.config)
    _emit(experiments.converge(cfg, args.tol, out=args.out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lzheom", description="Open-system Landau-Zener simulations (HEOM).")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single run of a configuration file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory, or a .csv file name")
    p.add_argument("--tol", type=float, help="auto-converge the depth to this fidelity tolerance")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="final fidelity over a grid of one parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--grid", required=True, help="a,b,c | lin:a:b:n | log:a:b:n")
    p.add_argument("--out")
    p.add_argument("--tol", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("preset", help="reproduce a published figure")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--out", default=".")
    p.add_argument("--tol", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--gnuplot", action="store_true", help="also write <name>.gp")
    p.add_argument("--check", action="store_true",
                   help="exit 2 if any expected feature does not hold")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("oracle-check", help="compare against the pseudomode model")
    p.add_argument("--config", required=True)
    p.add_argument("--threshold", type=float, default=experiments.ORACLE_TOL)
    p.add_argument("--tol", type=float, help="auto-converge the hierarchy first")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("converge", help="increase depth until F(t) stops changing")
    p.add_argument("--config", required=True)
    p.add_argument("--tol", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except (NumericalFailure, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    finally:
        logging.captureWarnings(False)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
