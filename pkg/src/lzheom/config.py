"""Line-oriented ``key = value`` run configuration.

Example::

    # CD driving at intermediate sweep rate
    protocol = lz_cd
    tf = 5
    gamma = 1.0
    depth = 14

Unset keys fall back to the standard parameter set (``X = 0.5``,
``z0 = -6``, ``zf = 6``, ``lambda = omega_c = 0.5``, ``gx = 0.5``,
``gamma = 0``, ``protocol = lz``, ``tf = 100``). ``depth`` and ``dt`` have
run-dependent defaults, see :func:`suggest_depth` and :func:`suggest_dt`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .bath import BathSpec
from .heom import DEFAULT_DEPTH, SimulationConfig
from .protocols import BiasSchedule, Mode, ProtocolSpec, ScheduleKind, field_coefficients
from .pseudomode import PseudomodeConfig

MAX_SAMPLES = 1000


class ConfigError(ValueError):
    """Invalid configuration document or value; ``keys`` names the fields
    involved in a constraint violation."""

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


@dataclass(frozen=True)
class RunConfig:
    protocol: Mode = Mode.LZ
    schedule: Optional[ScheduleKind] = None
    z0: float = -6.0
    zf: float = 6.0
    X: float = 0.5
    tf: float = 100.0
    gamma: float = 0.0
    lam: float = 0.5
    omega_c: float = 0.5
    gz: float = 0.0
    gx: float = 0.5
    depth: Optional[int] = None
    dt: Optional[float] = None
    sample_every: Optional[int] = None
    td: Optional[float] = None
    n_fock: int = 16
    out: Optional[str] = None
    preset: Optional[str] = None
    oracle: bool = False
    converge_tol: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "protocol", Mode(self.protocol))
        if self.schedule is None:
            kind = ScheduleKind.QUINTIC if self.protocol is Mode.TCD else ScheduleKind.LINEAR
            object.__setattr__(self, "schedule", kind)
        else:
            object.__setattr__(self, "schedule", ScheduleKind(self.schedule))
        _validate(self)

    # -- derived objects ---------------------------------------------------
    def protocol_spec(self) -> ProtocolSpec:
        return ProtocolSpec(
            schedule=BiasSchedule(self.schedule, self.z0, self.zf, self.tf),
            X=self.X, mode=self.protocol, t_D=self.td,
        )

    def bath_spec(self) -> BathSpec:
        return BathSpec(gamma=self.gamma, lam=self.lam, omega_c=self.omega_c,
                        gz=self.gz, gx=self.gx)

    def resolved_depth(self) -> int:
        if self.depth is not None:
            return self.depth
        if self.converge_tol is not None:
            return suggest_depth(self.gamma)
        return max(DEFAULT_DEPTH, suggest_depth(self.gamma) + 6)

    def resolved_dt(self) -> float:
        if self.dt is not None:
            return self.dt
        return suggest_dt(self.protocol_spec(), self.resolved_depth(), self.bath_spec())

    def resolved_sample_every(self) -> int:
        if self.sample_every is not None:
            return self.sample_every
        n_steps = math.ceil(self.tf / self.resolved_dt() - 1e-9)
        return max(1, math.ceil(n_steps / MAX_SAMPLES))

    def simulation_config(self) -> SimulationConfig:
        return SimulationConfig(
            protocol=self.protocol_spec(), bath=self.bath_spec(),
            depth=self.resolved_depth(), dt=self.resolved_dt(),
            sample_every=self.resolved_sample_every(),
        )

    def pseudomode_config(self, n_fock: Optional[int] = None) -> PseudomodeConfig:
        return PseudomodeConfig(
            protocol=self.protocol_spec(), bath=self.bath_spec(),
            n_fock=n_fock or self.n_fock, dt=self.resolved_dt(),
            sample_every=self.resolved_sample_every(),
        )

    def with_param(self, name: str, value) -> "RunConfig":
        """Copy with one sweep parameter replaced (``Q`` sets ``td = tf / Q``)."""
        if name == "Q":
            return replace(self, td=self.tf / value)
        if name == "t_D":
            name = "td"
        return replace(self, **{name: value})


def suggest_depth(gamma: float) -> int:
    """Starting hierarchy depth; convergence at tolerance 1e-4 was measured
    to need roughly ``6 + 3 gamma`` for the standard parameters."""
    return max(2, 2 * int((3 + 3 * gamma) / 2))


def _nice_floor(x: float) -> float:
    exp = math.floor(math.log10(x))
    for m in (5.0, 2.5, 2.0, 1.0):
        if m * 10**exp <= x * (1 + 1e-12):
            return m * 10**exp
    return 10**exp  # pragma: no cover


def suggest_dt(protocol: ProtocolSpec, depth: int, bath: BathSpec) -> float:
    """Step size from the sweep duration, capped so that
    ``dt * max(|H|_peak, depth |nu|) <= 0.1``."""
    tf = protocol.tf
    if tf <= 0.1:
        base = 1e-6
    elif tf < 1:
        base = 1e-4
    elif tf < 20:
        base = 1e-3
    else:
        base = 5e-3
    hx, hy, hz = field_coefficients(np.linspace(0, tf, 4001), protocol)
    h_peak = float(np.max(np.sqrt(hx**2 + hy**2 + hz**2)))
    nu_abs = math.hypot(bath.lam, bath.omega_c)
    scale = max(h_peak, max(depth, 1) * nu_abs)
    return min(base, _nice_floor(0.1 / scale))


_FLOAT_KEYS = {"z0", "zf", "X", "tf", "gamma", "lambda", "omega_c", "gz", "gx", "dt", "td"}
_INT_KEYS = {"depth", "sample_every", "n_fock"}
_STR_KEYS = {"protocol", "schedule", "out", "preset"}
_BOOL_KEYS = {"oracle"}
# case-insensitive spellings accepted for each key
_KEY_ALIASES = {k.lower(): k for k in _FLOAT_KEYS | _INT_KEYS | _STR_KEYS | _BOOL_KEYS}
_KEY_ALIASES.update({"t_d": "td", "lam": "lambda"})


def _validate(cfg: RunConfig) -> None:
    checks = [
        (cfg.gamma >= 0, "gamma must be >= 0", ("gamma",)),
        (cfg.lam > 0, "lambda must be > 0", ("lam",)),
        (cfg.X > 0, "X must be > 0", ("X",)),
        (cfg.tf > 0, "tf must be > 0", ("tf",)),
        (cfg.depth is None or cfg.depth >= 0, "depth must be >= 0", ("depth",)),
        (cfg.dt is None or cfg.dt > 0, "dt must be > 0", ("dt",)),
        (cfg.sample_every is None or cfg.sample_every >= 1, "sample_every must be >= 1",
         ("sample_every",)),
        (cfg.td is None or cfg.td > 0, "td must be > 0", ("td",)),
        (cfg.n_fock >= 2, "n_fock must be >= 2", ("n_fock",)),
        (cfg.converge_tol is None or cfg.converge_tol > 0, "tolerance must be > 0", ()),
        (not (cfg.protocol is Mode.TCD and cfg.schedule is not ScheduleKind.QUINTIC),
         "protocol tcd requires schedule = quintic", ("protocol", "schedule")),
        (not (cfg.protocol is Mode.CD_ONLY_DD and cfg.td is None),
         "protocol cd_only_dd requires td", ("protocol",)),
    ]
    for ok, msg, keys in checks:
        if not ok:
            raise ConfigError(msg, keys)
    for name in ("z0", "zf", "X", "tf", "gamma", "lam", "omega_c", "gz", "gx"):
        if not math.isfinite(getattr(cfg, name)):
            raise ConfigError(f"{name} must be finite", (name,))


def _convert(key: str, raw: str):
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _INT_KEYS:
        return int(raw)
    if key in _BOOL_KEYS:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if key == "protocol":
        return Mode(raw.lower())
    if key == "schedule":
        return ScheduleKind(raw.lower())
    return raw


def parse_config(text: str) -> RunConfig:
    """Parse a configuration document into a validated :class:`RunConfig`.

    Raises
    ------
    ConfigError
        Naming the offending line for unknown keys, unparsable values,
        duplicates, and constraint violations.
    """
    values = {}
    where = {}
    known = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS | _BOOL_KEYS
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        canon = key if key in known else _KEY_ALIASES.get(key.lower())
        if canon is None:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            value = _convert(canon, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
        attr = "lam" if canon == "lambda" else canon
        if attr in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[attr] = value
        where[attr] = lineno

    if "preset" in values:
        extra = sorted(set(values) - {"preset", "out"})
        if extra:
            raise ConfigError(
                f"line {where[extra[0]]}: preset is exclusive with explicit parameters"
            )
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        lines = sorted(where[k] for k in exc.keys if k in where)
        hint = "lines " + ", ".join(map(str, lines)) if len(lines) > 1 else (
            f"line {lines[0]}" if lines else "config")
        raise ConfigError(f"{hint}: {exc}", exc.keys) from None


def parse_grid(spec: str) -> list:
    """Grid specification: ``a,b,c`` | ``lin:start:stop:num`` | ``log:start:stop:num``."""
    spec = spec.strip()
    try:
        if spec.startswith(("lin:", "log:")):
            kind, a, b, n = spec.split(":")
            n = int(n)
            if n < 1:
                raise ValueError("num must be >= 1")
            if kind == "lin":
                values = np.linspace(float(a), float(b), n)
            else:
                values = np.geomspace(float(a), float(b), n)
        else:
            values = np.array([float(v) for v in spec.split(",") if v.strip()])
    except ValueError as exc:
        raise ConfigError(f"bad grid {spec!r}: {exc}") from None
    if values.size == 0:
        raise ConfigError("grid is empty")
    if not np.all(np.isfinite(values)):
        raise ConfigError("grid values must be finite")
    d = np.diff(values)
    if values.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ConfigError("grid must be strictly ordered")
    return [float(v) for v in values]


SWEEP_AXES = ("gamma", "tf", "t_D", "Q")
