import os

import numpy as np
import pytest

from lzheom.config import RunConfig
from lzheom.experiments import (
    SWEEP_HEADER, TRACE_HEADER, atomic_write, oracle_check, read_sweep_csv, read_trace_csv,
    run, simulate, sweep, sweep_rows,
)

QUICK = dict(protocol="lz_cd", tf=1.0, gamma=0.5, depth=8, dt=1e-3)


def test_trace_csv_header_and_round_trip(tmp_path):
    cfg = RunConfig(**QUICK)
    [path] = run(cfg, out=tmp_path)
    assert path.read_text().splitlines()[0] == ",".join(TRACE_HEADER)
    data = read_trace_csv(path)
    trace = simulate(cfg)["trace"]
    np.testing.assert_array_equal(data["fidelity"], trace.fidelity)
    np.testing.assert_array_equal(data["t"], trace.times)


def test_run_is_byte_identical(tmp_path):
    cfg = RunConfig(**QUICK)
    [a] = run(cfg, out=tmp_path / "a.csv")
    [b] = run(cfg, out=tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_gamma_zero_run_has_unit_purity(tmp_path):
    [path] = run(RunConfig(protocol="lz", tf=5.0), out=tmp_path)
    np.testing.assert_allclose(read_trace_csv(path)["purity"], 1, atol=1e-8)


def test_oracle_run_writes_reference(tmp_path):
    paths = run(RunConfig(oracle=True, n_fock=8, **QUICK), out=tmp_path)
    assert [p.name for p in paths] == ["trace.csv", "trace_pseudomode.csv"]


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    target = tmp_path / "x.csv"
    with pytest.raises(RuntimeError):
        with atomic_write(target) as fh:
            fh.write("partial")
            raise RuntimeError("boom")
    assert os.listdir(tmp_path) == []


def test_failed_run_writes_no_file(tmp_path):
    cfg = RunConfig(protocol="lz", tf=50.0, gamma=1.0, depth=10, dt=0.5)
    with pytest.warns(UserWarning), pytest.raises(Exception):
        run(cfg, out=tmp_path)
    assert os.listdir(tmp_path) == []


def test_sweep_rows_are_order_independent():
    cfg = RunConfig(**QUICK)
    grid = [0.2, 0.5, 1.0]
    a = sweep_rows(cfg, "gamma", grid)
    b = sweep_rows(cfg, "gamma", grid[::-1])
    assert [r["value"] for r in a] == grid
    for row in a:
        match = next(r for r in b if r["value"] == row["value"])
        assert match["final_fidelity"] == row["final_fidelity"]
        assert match["depth_used"] == row["depth_used"] == 8


def test_sweep_csv_and_error_rows(tmp_path):
    cfg = RunConfig(**QUICK)
    path = sweep(cfg, "t_D", [0.5, -1.0], out=tmp_path)
    rows = read_sweep_csv(path)
    assert path.read_text().splitlines()[0] == ",".join(SWEEP_HEADER)
    assert rows[0]["status"] == "ok" and rows[0]["param"] == "t_D"
    assert rows[1]["status"].startswith("error:") and rows[1]["final_fidelity"] == ""
    with pytest.raises(ValueError):
        sweep_rows(cfg, "omega_c", [1.0])


def test_q_axis_sets_dd_period():
    cfg = RunConfig(protocol="cd_only_dd", tf=1.0, gamma=0.5, depth=6, td=1.0, dt=1e-3)
    [row] = sweep_rows(cfg, "Q", [4.0])
    direct = simulate(cfg.with_param("t_D", 0.25))["trace"].final_fidelity
    assert row["final_fidelity"] == direct


def test_sweep_with_convergence_reports_depth():
    cfg = RunConfig(protocol="lz", tf=1.0, converge_tol=1e-4)
    rows = sweep_rows(cfg, "gamma", [0.5, 2.0])
    assert rows[0]["depth_used"] < rows[1]["depth_used"]


def test_oracle_check_pass_and_negative_control():
    good = oracle_check(RunConfig(protocol="tcd", tf=1.0, gamma=0.5, depth=12, dt=1e-3))
    assert good["status"] == "pass" and good["max_trace_distance"] < 1e-6
    bad = oracle_check(RunConfig(protocol="lz_cd", tf=5.0, gamma=5.0, depth=2, dt=1e-3))
    assert bad["status"] == "fail" and bad["max_trace_distance"] > 1e-3
    with pytest.raises(ValueError):
        oracle_check(RunConfig(tf=1.0))


def test_oracle_check_raises_fock_cutoff():
    report = oracle_check(RunConfig(protocol="lz_cd", tf=1.0, gamma=1.0, depth=12,
                                    n_fock=4, dt=1e-3))
    assert report["n_fock"] > 4
    assert report["status"] == "pass"
