"""Named parameter sets for the published figures, with the qualitative
features each one is expected to show.

Every preset shares the standard parameters (``X = 0.5``, ``zf = -z0 = 6``,
``lambda = omega_c = 0.5``, transverse coupling ``gx = 0.5``) and adds its
own curves (single traces) and sweeps (final fidelity over a grid).

The reference plain-CD curve of fig4 uses the linear schedule while the
transformed CD uses the quintic one; flip ``schedule`` on the ``cd`` curve
to compare both on the quintic schedule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import RunConfig
from .experiments import simulate, sweep_rows, write_sweep_csv, write_trace_csv
from .observables import find_extrema, lz_probability

logger = logging.getLogger(__name__)

GAMMA_GRID = tuple(float(g) for g in np.geomspace(0.01, 10, 25))
# fig1b needs headroom above gamma = 10: the slow-sweep peak sits near 10-11
GAMMA_GRID_WIDE = tuple(float(g) for g in np.geomspace(0.01, 20, 25))
TF_GRID = tuple(float(t) for t in np.geomspace(0.1, 500, 25))
Q_GRID = tuple(float(q) for q in np.round(np.arange(5.50, 6.30 + 1e-9, 0.02), 2))
NOISE_FLOOR = 1e-3


@dataclass(frozen=True)
class Curve:
    label: str
    params: dict


@dataclass(frozen=True)
class Sweep:
    label: str
    axis: str
    grid: tuple
    params: dict


@dataclass(frozen=True)
class Feature:
    """One expected property of a preset's output.

    ``kind`` selects the check (see :func:`check_feature`); ``args`` carries
    curve labels and thresholds.
    """

    kind: str
    description: str
    args: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PresetEntry:
    name: str
    figure: str
    curves: tuple = ()
    sweeps: tuple = ()
    features: tuple = ()

    def run_configs(self, converge_tol: Optional[float] = None):
        for c in self.curves:
            yield c.label, RunConfig(converge_tol=converge_tol, **c.params)
        for s in self.sweeps:
            yield s.label, RunConfig(converge_tol=converge_tol, **s.params)


def _curves(prefix, values, key, **common):
    return tuple(Curve(f"{prefix}{v:g}", {key: v, **common}) for v in values)


PRESETS = {}


def _register(entry: PresetEntry):
    PRESETS[entry.name] = entry


_register(PresetEntry(
    name="fig1a", figure="1(a): F(t) at tf=100 for several couplings",
    curves=_curves("gamma_", (0.0, 0.1, 1.0, 5.0), "gamma", protocol="lz", tf=100.0),
    features=(
        Feature("final_near", "closed-system F(tf) within 0.02 of the LZ formula",
                {"curve": "gamma_0", "target": lz_probability(0.5, 0.12), "tol": 0.02}),
        Feature("unit_purity", "closed-system purity stays 1", {"curve": "gamma_0"}),
    ),
))

_register(PresetEntry(
    name="fig1b", figure="1(b): F(tf) versus gamma for tf = 1, 10, 20, 100",
    sweeps=tuple(
        Sweep(f"tf_{tf:g}", "gamma", GAMMA_GRID_WIDE, {"protocol": "lz", "tf": tf})
        for tf in (1.0, 10.0, 20.0, 100.0)
    ),
    features=(
        Feature("min_then_max", "tf=100: interior minimum followed by interior maximum",
                {"sweep": "tf_100"}),
        Feature("no_extrema", "tf=1: monotone rise, no interior extrema",
                {"sweep": "tf_1"}),
        Feature("has_max", "tf=10: a single peak", {"sweep": "tf_10"}),
        Feature("has_max", "tf=20: a single peak", {"sweep": "tf_20"}),
    ),
))

_register(PresetEntry(
    name="fig1c", figure="1(c): F(t) at gamma=5 for tf = 0.1, 5, 50, 500",
    curves=_curves("tf_", (0.1, 5.0, 50.0, 500.0), "tf", protocol="lz", gamma=5.0),
    features=(
        Feature("final_order", "fast sweep ends lowest",
                {"low": "tf_0.1", "high": ["tf_5", "tf_50", "tf_500"]}),
    ),
))

_register(PresetEntry(
    name="fig1d", figure="1(d): F(tf) versus tf for several couplings",
    sweeps=tuple(
        Sweep(f"gamma_{g:g}", "tf", TF_GRID, {"protocol": "lz", "gamma": g})
        for g in (1.0, 5.0)
    ),
    features=(
        Feature("non_monotone", "gamma=1: non-monotone in tf", {"sweep": "gamma_1"}),
        Feature("non_monotone", "gamma=5: non-monotone in tf", {"sweep": "gamma_5"}),
    ),
))

_register(PresetEntry(
    name="fig2a", figure="2(a): CD driving at tf=5",
    curves=_curves("gamma_", (0.0, 0.5, 1.0, 5.0), "gamma", protocol="lz_cd", tf=5.0)
    + (Curve("lz_gamma_5", {"protocol": "lz", "tf": 5.0, "gamma": 5.0}),),
    features=(
        Feature("unit_fidelity", "closed system tracks the ground state exactly",
                {"curve": "gamma_0", "tol": 1e-6}),
        Feature("final_order", "at gamma=5 CD ends below plain LZ",
                {"low": "gamma_5", "high": ["lz_gamma_5"]}),
    ),
))

_register(PresetEntry(
    name="fig2b", figure="2(b): CD driving at tf=0.1",
    curves=_curves("gamma_", (0.5, 1.0, 5.0), "gamma", protocol="lz_cd", tf=0.1),
    features=(
        Feature("min_fidelity", "gamma=0.5: F(t) >= 0.99 throughout",
                {"curve": "gamma_0.5", "min": 0.99}),
        Feature("min_fidelity", "gamma=1: F(t) >= 0.99 throughout",
                {"curve": "gamma_1", "min": 0.99}),
        Feature("min_fidelity", "gamma=5: F(t) >= 0.99 throughout",
                {"curve": "gamma_5", "min": 0.99}),
    ),
))

for _name, _tf in (("fig3a", 2.0), ("fig3b", 10.0)):
    _register(PresetEntry(
        name=_name, figure=f"3: F(tf) versus gamma at tf={_tf:g}, with and without CD",
        sweeps=(
            Sweep("lz", "gamma", GAMMA_GRID, {"protocol": "lz", "tf": _tf}),
            Sweep("lz_cd", "gamma", GAMMA_GRID, {"protocol": "lz_cd", "tf": _tf}),
        ),
        features=(
            Feature("crossing", "CD and plain curves cross", {"a": "lz_cd", "b": "lz"}),
        ),
    ))

_register(PresetEntry(
    name="fig4a", figure="4(a): CD versus transformed CD, tf=1, gamma=1",
    curves=(
        Curve("cd", {"protocol": "lz_cd", "schedule": "linear", "tf": 1.0, "gamma": 1.0}),
        Curve("tcd", {"protocol": "tcd", "schedule": "quintic", "tf": 1.0, "gamma": 1.0}),
    ),
    features=(
        Feature("final_order", "transformed CD ends below CD by more than 0.01",
                {"low": "tcd", "high": ["cd"], "margin": 0.01}),
    ),
))

_register(PresetEntry(
    name="fig4b", figure="4(b): final fidelity of CD and transformed CD versus gamma, tf=1",
    sweeps=(
        Sweep("cd", "gamma", (0.5, 1.0, 2.0, 5.0),
              {"protocol": "lz_cd", "schedule": "linear", "tf": 1.0}),
        Sweep("tcd", "gamma", (0.5, 1.0, 2.0, 5.0),
              {"protocol": "tcd", "schedule": "quintic", "tf": 1.0}),
    ),
    features=(
        Feature("dominates", "F_TCD <= F_CD + 0.005 everywhere, by > 0.01 at gamma=1",
                {"low": "tcd", "high": "cd", "slack": 0.005, "strict_at": 1.0,
                 "strict_margin": 0.01}),
    ),
))

_register(PresetEntry(
    name="fig5", figure="5: CD with continuous dynamical decoupling, tf=5, gamma=1",
    curves=(
        Curve("cd_no_bath", {"protocol": "lz_cd", "tf": 5.0, "gamma": 0.0}),
        Curve("cd_bath", {"protocol": "lz_cd", "tf": 5.0, "gamma": 1.0}),
        Curve("cd_dd", {"protocol": "cd_only_dd", "tf": 5.0, "gamma": 1.0,
                        "td": 5.0 / 5.94}),
    ),
    sweeps=(
        Sweep("q_scan", "Q", Q_GRID,
              {"protocol": "cd_only_dd", "tf": 5.0, "gamma": 1.0, "td": 5.0 / 6.0}),
    ),
    features=(
        Feature("unit_fidelity", "no bath: unit fidelity", {"curve": "cd_no_bath",
                                                            "tol": 1e-6}),
        Feature("final_near", "CD with bath: F(tf) = 0.80 +/- 0.05",
                {"curve": "cd_bath", "target": 0.80, "tol": 0.05}),
        Feature("sweep_max_near", "CD+DD at the best Q: F(tf) = 0.97 +/- 0.02",
                {"sweep": "q_scan", "target": 0.97, "tol": 0.02}),
        Feature("argmax_in", "best Q lies in [5.8, 6.0) (below the integer 6)",
                {"sweep": "q_scan", "lo": 5.8, "hi": 6.0}),
    ),
))


@dataclass
class PresetResult:
    entry: PresetEntry
    traces: dict
    sweeps: dict
    depths: dict
    paths: list

    def sweep_xy(self, label):
        rows = self.sweeps[label]
        bad = [r for r in rows if r["status"] != "ok"]
        if bad:
            raise RuntimeError(f"sweep {label} has failed rows: {bad[0]['status']}")
        return (np.array([r["value"] for r in rows]),
                np.array([r["final_fidelity"] for r in rows]))

    def check(self) -> list:
        """``[(description, passed, detail)]`` for every expected feature."""
        return [check_feature(f, self) for f in self.entry.features]


def check_feature(feature: Feature, res: PresetResult):
    a = feature.args
    kind = feature.kind
    try:
        if kind == "final_near":
            v = res.traces[a["curve"]].final_fidelity
            return feature.description, abs(v - a["target"]) <= a["tol"], f"F(tf)={v:.6f}"
        if kind == "unit_purity":
            tr = res.traces[a["curve"]]
            dev = float(np.max(np.abs(tr.purity - 1)))
            return feature.description, dev <= 1e-8, f"max|purity-1|={dev:.2e}"
        if kind == "unit_fidelity":
            dev = float(np.max(np.abs(res.traces[a["curve"]].fidelity - 1)))
            return feature.description, dev < a["tol"], f"max|F-1|={dev:.2e}"
        if kind == "min_fidelity":
            v = float(np.min(res.traces[a["curve"]].fidelity))
            return feature.description, v >= a["min"], f"min F={v:.6f}"
        if kind == "final_order":
            low = res.traces[a["low"]].final_fidelity
            highs = [res.traces[h].final_fidelity for h in a["high"]]
            ok = all(low < h - a.get("margin", 0.0) for h in highs)
            return feature.description, ok, f"low={low:.5f} high={[round(h, 5) for h in highs]}"
        if kind in ("min_then_max", "no_extrema", "has_max", "non_monotone"):
            x, y = res.sweep_xy(a["sweep"])
            ext = find_extrema(x, y, NOISE_FLOOR)
            kinds = [e["kind"] for e in ext]
            if kind == "min_then_max":
                ok = "min" in kinds and "max" in kinds[kinds.index("min"):]
            elif kind == "no_extrema":
                ok = not ext
            elif kind == "has_max":
                ok = "max" in kinds
            else:
                ok = bool(ext)
            detail = ", ".join(f"{e['kind']}@{e['x']:.4g}" for e in ext) or "none"
            return feature.description, ok, f"extrema: {detail}"
        if kind == "crossing":
            x, fa = res.sweep_xy(a["a"])
            _, fb = res.sweep_xy(a["b"])
            d = fa - fb
            where = [float(x[i]) for i in range(len(d) - 1) if d[i] * d[i + 1] < 0]
            return feature.description, bool(where), f"sign changes near gamma={where}"
        if kind == "dominates":
            x, lo = res.sweep_xy(a["low"])
            _, hi = res.sweep_xy(a["high"])
            ok = bool(np.all(lo <= hi + a["slack"]))
            j = int(np.argmin(np.abs(x - a["strict_at"])))
            ok = ok and (hi[j] - lo[j] > a["strict_margin"])
            return feature.description, ok, f"F_high-F_low={np.round(hi - lo, 5).tolist()}"
        if kind == "sweep_max_near":
            x, y = res.sweep_xy(a["sweep"])
            v = float(y.max())
            return feature.description, abs(v - a["target"]) <= a["tol"], \
                f"max F(tf)={v:.5f} at {x[np.argmax(y)]:g}"
        if kind == "argmax_in":
            x, y = res.sweep_xy(a["sweep"])
            q = float(x[np.argmax(y)])
            return feature.description, a["lo"] <= q < a["hi"], f"argmax={q:g}"
    except (KeyError, RuntimeError) as exc:
        return feature.description, False, f"unavailable: {exc}"
    raise ValueError(f"unknown feature kind {kind!r}")


def run_preset(name: str, out=None, converge_tol: Optional[float] = None,
               jobs: int = 1) -> PresetResult:
    """Run every curve and sweep of a preset, writing ``<name>_<label>.csv``
    files into ``out`` when given."""
    try:
        entry = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    traces, sweeps, depths, paths = {}, {}, {}, []
    for c in entry.curves:
        cfg = RunConfig(converge_tol=converge_tol, **c.params)
        logger.info("%s/%s", name, c.label)
        result = simulate(cfg)
        traces[c.label] = result["trace"]
        depths[c.label] = result["depth_used"]
        if out is not None:
            paths.append(write_trace_csv(Path(out) / f"{name}_{c.label}.csv", result["trace"]))
    for s in entry.sweeps:
        cfg = RunConfig(converge_tol=converge_tol, **s.params)
        logger.info("%s/%s (%d points)", name, s.label, len(s.grid))
        rows = sweep_rows(cfg, s.axis, s.grid, jobs=jobs)
        sweeps[s.label] = rows
        depths[s.label] = [r["depth_used"] for r in rows]
        if out is not None:
            paths.append(write_sweep_csv(Path(out) / f"{name}_{s.label}.csv", rows))
    return PresetResult(entry=entry, traces=traces, sweeps=sweeps, depths=depths, paths=paths)


def gnuplot_script(result: PresetResult) -> str:
    """Minimal gnuplot script plotting the CSVs of a preset run."""
    lines = ["set datafile separator ','", "set key outside", "set ylabel 'fidelity'"]
    traces = [p for p in result.paths if p.stem.split("_", 1)[1] in result.traces]
    sweeps = [p for p in result.paths if p not in traces]
    if traces:
        lines.append("set xlabel 't'")
        lines.append("plot " + ", ".join(
            f"'{p.name}' using 1:2 skip 1 with lines title '{p.stem}'" for p in traces))
    if sweeps:
        lines.append("set logscale x")
        lines.append("plot " + ", ".join(
            f"'{p.name}' using 2:3 skip 1 with linespoints title '{p.stem}'" for p in sweeps))
    return "\n".join(lines) + "\n"
