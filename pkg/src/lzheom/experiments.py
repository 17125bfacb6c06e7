"""Batch drivers: single runs, parameter sweeps, convergence studies and the
hierarchy-vs-pseudomode cross-check, all persisted as CSV."""

from __future__ import annotations

import csv
import logging
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .config import RunConfig
from .heom import ConvergenceError, NumericalFailure, auto_converge, evolve
from .observables import FidelityTrace
from .pseudomode import evolve_pseudomode, trace_distance_max

logger = logging.getLogger(__name__)

TRACE_HEADER = ["t", "fidelity", "trace_re", "trace_im", "purity", "min_eigenvalue"]
SWEEP_HEADER = ["param", "value", "final_fidelity", "depth_used", "status", "wall_ms"]
ORACLE_TOL = 1e-3
MAX_N_FOCK = 64


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@contextmanager
def atomic_write(path):
    """Write to a temporary sibling and move into place; nothing is left
    behind if the body raises."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace_csv(path, trace: FidelityTrace) -> Path:
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in zip(trace.times, trace.fidelity, trace.trace.real, trace.trace.imag,
                       trace.purity, trace.min_eigenvalue):
            w.writerow([fmt(v) for v in row])
    return Path(path)


def read_trace_csv(path) -> dict:
    """Columns of a trace CSV as float arrays keyed by header name."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != TRACE_HEADER:
        raise ValueError(f"unexpected header {rows[0]}")
    data = np.array(rows[1:], dtype=float)
    return {name: data[:, i] for i, name in enumerate(TRACE_HEADER)}


def write_sweep_csv(path, rows) -> Path:
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([
                r["param"], fmt(r["value"]),
                fmt(r["final_fidelity"]) if r["final_fidelity"] is not None else "",
                r["depth_used"], r["status"], str(int(round(r["wall_ms"]))),
            ])
    return Path(path)


def read_sweep_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        return list(reader)


def _trace_path(out, default_name: str) -> Path:
    out = Path(out or ".")
    if out.suffix == ".csv":
        return out
    return out / default_name


def simulate(config: RunConfig) -> dict:
    """One hierarchy run, converged when ``config.converge_tol`` is set.

    Returns ``{"trace", "depth_used", "report"}``.
    """
    cfg = config.simulation_config()
    if config.converge_tol is not None:
        return auto_converge(cfg, fidelity_tol=config.converge_tol)
    trace = evolve(cfg)
    return {"trace": trace, "depth_used": cfg.depth, "report": None}


def run(config: RunConfig, out=None, name: str = "trace.csv") -> list:
    """Run one configuration and write its CSV(s); returns the written paths.

    With ``config.oracle`` set, the pseudomode reference trace is written
    next to the hierarchy trace.
    """
    target = _trace_path(out or config.out, name)
    result = simulate(config)
    paths = [write_trace_csv(target, result["trace"])]
    if config.oracle:
        ref = evolve_pseudomode(config.pseudomode_config())
        paths.append(write_trace_csv(target.with_name(target.stem + "_pseudomode.csv"), ref))
    return paths


def _sweep_row(args):
    config, axis, value = args
    start = time.perf_counter()
    row = {"param": axis, "value": value, "final_fidelity": None, "depth_used": "",
           "status": "ok", "violations": []}
    try:
        result = simulate(config.with_param(axis, value))
        row["final_fidelity"] = result["trace"].final_fidelity
        row["depth_used"] = result["depth_used"]
        # not persisted; lets callers audit density-matrix invariants per row
        row["violations"] = result["trace"].invariant_violations()
    except (NumericalFailure, ConvergenceError, ValueError) as exc:
        row["status"] = f"error: {type(exc).__name__}: {exc}"
        logger.warning("sweep %s=%g failed: %s", axis, value, exc)
    row["wall_ms"] = 1e3 * (time.perf_counter() - start)
    return row


def sweep_rows(config: RunConfig, axis: str, grid, jobs: int = 1) -> list:
    """Evaluate ``F(tf)`` independently at every grid value of ``axis``."""
    from .config import SWEEP_AXES

    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    tasks = [(config, axis, float(v)) for v in grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_row, tasks))
    return [_sweep_row(t) for t in tasks]


def sweep(config: RunConfig, axis: str, grid, out=None, jobs: int = 1,
          name: str = "sweep.csv") -> Path:
    rows = sweep_rows(config, axis, grid, jobs=jobs)
    return write_sweep_csv(_trace_path(out or config.out, name), rows)


def converge(config: RunConfig, tol: float, out=None) -> dict:
    """``auto_converge`` from the configured starting depth; writes the
    converged trace and returns the convergence report."""
    config = replace(config, converge_tol=tol)
    result = simulate(config)
    path = write_trace_csv(_trace_path(out or config.out, "converged.csv"), result["trace"])
    report = dict(result["report"])
    report["path"] = str(path)
    report["final_fidelity"] = result["trace"].final_fidelity
    return report


def oracle_check(config: RunConfig, tol: float = ORACLE_TOL,
                 converge_tol: Optional[float] = None) -> dict:
    """Run the hierarchy and the pseudomode model on the same protocol and
    compare reduced states sample by sample.

    The Fock cutoff is doubled while the pseudomode run leaks population into
    its top level; a run that is still cutoff-limited at ``MAX_N_FOCK`` is
    reported as ``inconclusive``, never as a pass.
    """
    if not config.gamma > 0:
        raise ValueError("oracle_check needs gamma > 0")
    if converge_tol is not None:
        config = replace(config, converge_tol=converge_tol)
    heom = simulate(config)
    n_fock = config.n_fock
    while True:
        ref = evolve_pseudomode(config.pseudomode_config(n_fock))
        if not ref.meta["cutoff_limited"] or 2 * n_fock > MAX_N_FOCK:
            break
        n_fock *= 2
    distance = trace_distance_max(heom["trace"], ref)
    if ref.meta["cutoff_limited"]:
        status = "inconclusive"
    else:
        status = "pass" if distance < tol else "fail"
    return {
        "status": status,
        "max_trace_distance": distance,
        "tolerance": tol,
        "depth": heom["depth_used"],
        "n_fock": n_fock,
        "top_fock_population": ref.meta["top_fock_population"],
        "heom_trace": heom["trace"],
        "pseudomode_trace": ref,
    }
