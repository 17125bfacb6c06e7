"""Time-dependent qubit Hamiltonians for finite-time Landau-Zener sweeps.

Every protocol Hamiltonian is a real combination of Pauli matrices,

    H(t) = hx(t) sx + hy(t) sy + hz(t) sz,

so the engines work with the three coefficient functions returned by
:func:`field_coefficients` (vectorised over time) and :func:`hamiltonian`
only assembles the 2x2 matrix for a single instant.

Conventions
-----------
* ``theta = arccot(Z / X)`` on the branch ``(0, pi)``, continuous through
  ``Z = 0``.
* ``psi_g = -sin(theta/2)|up> + cos(theta/2)|down>`` and
  ``psi_e = cos(theta/2)|up> + sin(theta/2)|down>``.
* All schedule derivatives are analytic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .operators import IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z

_T_SLACK = 1e-12


class ScheduleKind(str, enum.Enum):
    LINEAR = "linear"
    QUINTIC = "quintic"


class Mode(str, enum.Enum):
    LZ = "lz"
    LZ_CD = "lz_cd"
    CD_ONLY = "cd_only"
    TCD = "tcd"
    CD_ONLY_DD = "cd_only_dd"


@dataclass(frozen=True)
class BiasSchedule:
    kind: ScheduleKind = ScheduleKind.LINEAR
    z0: float = -6.0
    zf: float = 6.0
    tf: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if not self.tf > 0:
            raise ValueError(f"tf must be positive, got {self.tf}")

    @property
    def rate(self) -> float:
        """Mean sweep rate ``(zf - z0) / tf``."""
        return (self.zf - self.z0) / self.tf


@dataclass(frozen=True)
class ProtocolSpec:
    schedule: BiasSchedule
    X: float = 0.5
    mode: Mode = Mode.LZ
    t_D: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.X > 0:
            raise ValueError(f"X must be positive, got {self.X}")
        if self.mode is Mode.TCD and self.schedule.kind is not ScheduleKind.QUINTIC:
            raise ValueError("transformed CD driving requires the quintic schedule")
        if self.mode is Mode.CD_ONLY_DD:
            if self.t_D is None or not self.t_D > 0:
                raise ValueError("cd_only_dd needs a positive DD period t_D")

    @property
    def tf(self) -> float:
        return self.schedule.tf

    @property
    def dd_amplitude(self) -> float:
        """``Y_D = pi / t_D`` (zero when no DD field is active)."""
        if self.mode is not Mode.CD_ONLY_DD:
            return 0.0
        return np.pi / self.t_D


@dataclass(frozen=True)
class AdiabaticFrame:
    theta: float
    psi_g: np.ndarray
    psi_e: np.ndarray
    E_minus: float
    E_plus: float


def bias(t, schedule: BiasSchedule):
    """Bias ``Z`` and its first two time derivatives at ``t`` (scalar or array).

    Raises
    ------
    ValueError
        If any ``t`` lies outside ``[0, tf]``.
    """
    t = np.asarray(t, dtype=float)
    tf = schedule.tf
    if np.any(t < -_T_SLACK * tf) or np.any(t > tf * (1 + _T_SLACK)):
        raise ValueError(f"t outside [0, {tf}]")
    delta = schedule.zf - schedule.z0
    if schedule.kind is ScheduleKind.LINEAR:
        z = schedule.z0 + delta * t / tf
        zdot = np.full_like(t, delta / tf)
        zddot = np.zeros_like(t)
    else:
        s = t / tf
        s2 = s * s
        s3 = s2 * s
        z = schedule.z0 + delta * (6 * s3 * s2 - 15 * s2 * s2 + 10 * s3)
        zdot = delta / tf * 30 * s2 * (s2 - 2 * s + 1)
        zddot = delta / tf**2 * 60 * s * (2 * s2 - 3 * s + 1)
    if z.ndim == 0:
        return float(z), float(zdot), float(zddot)
    return z, zdot, zddot


def mixing_angle(Z, X):
    """``arccot(Z/X)`` on ``(0, pi)``."""
    return np.arctan2(X, Z)


def adiabatic_frame(Z: float, X: float) -> AdiabaticFrame:
    if not X > 0:
        raise ValueError(f"X must be positive, got {X}")
    theta = float(mixing_angle(Z, X))
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    psi_g = np.array([-s, c], dtype=complex)
    psi_e = np.array([c, s], dtype=complex)
    e = 0.5 * np.hypot(Z, X)
    return AdiabaticFrame(theta=theta, psi_g=psi_g, psi_e=psi_e, E_minus=-e, E_plus=e)


def ground_state(Z, X) -> np.ndarray:
    """Adiabatic ground-state kets for scalar or array ``Z``; shape ``(..., 2)``."""
    theta = mixing_angle(np.asarray(Z, dtype=float), X)
    return np.stack([-np.sin(theta / 2), np.cos(theta / 2)], axis=-1).astype(complex)


def angle_rates(Z, Zdot, Zddot, X):
    """First and second time derivatives of the mixing angle."""
    r2 = X * X + Z * Z
    thdot = -Zdot * X / r2
    thddot = -X * (Zddot * r2 - 2 * Z * Zdot * Zdot) / (r2 * r2)
    return thdot, thddot


def field_coefficients(t, spec: ProtocolSpec):
    """Pauli coefficients ``(hx, hy, hz)`` of the protocol Hamiltonian at ``t``."""
    Z, Zd, Zdd = bias(t, spec.schedule)
    Z = np.asarray(Z, dtype=float)
    X = spec.X
    thdot, thddot = angle_rates(Z, np.asarray(Zd), np.asarray(Zdd), X)
    zero = np.zeros_like(Z)
    mode = spec.mode
    if mode is Mode.LZ:
        hx, hy, hz = np.full_like(Z, X / 2), zero, Z / 2
    elif mode is Mode.LZ_CD:
        hx, hy, hz = np.full_like(Z, X / 2), thdot / 2, Z / 2
    elif mode is Mode.CD_ONLY:
        hx, hy, hz = zero, thdot / 2, zero
    elif mode is Mode.TCD:
        P = np.sqrt(X * X + thdot * thdot)
        etadot = X * thddot / (X * X + thdot * thdot)
        hx, hy, hz = P / 2, zero, (Z - etadot) / 2
    elif mode is Mode.CD_ONLY_DD:
        hx, hy, hz = zero, thdot / 2 + np.pi / spec.t_D, zero
    else:  # pragma: no cover
        raise ValueError(f"unknown mode {mode}")
    return hx, hy, hz


def hamiltonian(t: float, spec: ProtocolSpec) -> np.ndarray:
    """2x2 system Hamiltonian of the protocol at time ``t``."""
    hx, hy, hz = (float(c) for c in field_coefficients(float(t), spec))
    return hx * SIGMA_X + hy * SIGMA_Y + hz * SIGMA_Z


def lz_hamiltonian(Z: float, X: float) -> np.ndarray:
    return 0.5 * Z * SIGMA_Z + 0.5 * X * SIGMA_X


def dd_average_check(t_D: float, V: np.ndarray, steps: int) -> np.ndarray:
    """Composite-trapezoid estimate of the period average of the coupling
    operator in the DD rotating frame, ``int_0^{t_D} U^dag V U dtau`` with
    ``U = exp(-i (pi/t_D) sy tau)``.

    The norm of the result measures how badly the DD field fails to average
    ``V`` away (zero means perfectly decoupled at first Magnus order).
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if not t_D > 0:
        raise ValueError("t_D must be positive")
    V = np.asarray(V, dtype=complex)
    tau = np.linspace(0.0, t_D, steps + 1)
    phi = np.pi / t_D * tau
    U = (np.cos(phi)[:, None, None] * IDENTITY
         - 1j * np.sin(phi)[:, None, None] * SIGMA_Y)
    vals = np.swapaxes(U, -1, -2).conj() @ V @ U
    h = t_D / steps
    return h * (vals.sum(axis=0) - 0.5 * (vals[0] + vals[-1]))
