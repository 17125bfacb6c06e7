"""Survival fidelity, analytic Landau-Zener benchmarks and curve analysis."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .operators import _diagnostic_arrays, validate_density
from .protocols import ground_state

# imaginary part of <psi_g|rho|psi_g> above this signals a non-Hermitian rho
_FIDELITY_IMAG_TOL = 1e-10


@dataclass
class FidelityTrace:
    """Sampled output of one simulation run.

    ``states`` holds the reduced 2x2 density matrices at each sample when the
    engine was asked to keep them (it always does by default; they are small).
    """

    times: np.ndarray
    fidelity: np.ndarray
    trace: np.ndarray
    hermiticity_defect: np.ndarray
    min_eigenvalue: np.ndarray
    purity: np.ndarray
    states: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_states(cls, times, states, Z, X, meta=None) -> "FidelityTrace":
        states = np.asarray(states, dtype=complex)
        trace, defect, min_eig, purity = _diagnostic_arrays(states)
        return cls(
            times=np.asarray(times, dtype=float),
            fidelity=fidelity_series(states, Z, X),
            trace=trace,
            hermiticity_defect=defect,
            min_eigenvalue=min_eig,
            purity=purity,
            states=states,
            meta=dict(meta or {}),
        )

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelity[-1])

    def invariant_violations(
        self,
        trace_tol: float = 1e-8,
        hermiticity_tol: float = 1e-10,
        positivity_tol: float = 1e-6,
        purity_tol: float = 1e-8,
    ) -> list:
        """Human-readable list of density-matrix invariant breaches (empty if none)."""
        out = []
        dtr = np.max(np.abs(self.trace - 1.0))
        if dtr > trace_tol:
            out.append(f"trace drift {dtr:.3g} > {trace_tol:g}")
        dh = np.max(self.hermiticity_defect)
        if dh > hermiticity_tol:
            out.append(f"hermiticity defect {dh:.3g} > {hermiticity_tol:g}")
        me = np.min(self.min_eigenvalue)
        if me < -positivity_tol:
            out.append(f"min eigenvalue {me:.3g} < {-positivity_tol:g}")
        pu = np.max(self.purity)
        if pu > 1 + purity_tol:
            out.append(f"purity {pu:.3g} > 1")
        return out


def fidelity_series(states, Z, X) -> np.ndarray:
    """``<psi_g(Z)|rho|psi_g(Z)>`` for a stack of states and matching biases."""
    psi = ground_state(Z, X)
    val = np.einsum("...i,...ij,...j->...", psi.conj(), states, psi)
    return np.real(val)


def survival_fidelity(rho: np.ndarray, Z: float, X: float) -> float:
    """Population of the instantaneous adiabatic ground state of ``H_LZ(Z, X)``.

    Returns the real part of the expectation; a non-negligible imaginary part
    or an invalid density matrix raises instead of being hidden by ``abs``.
    """
    if not X > 0:
        raise ValueError("X must be positive")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 density matrix, got shape {rho.shape}")
    diag = validate_density(rho)
    if not diag.is_valid():
        raise ValueError(f"invalid density matrix: {diag}")
    psi = ground_state(Z, X)
    val = psi.conj() @ rho @ psi
    if abs(val.imag) > _FIDELITY_IMAG_TOL:
        raise ValueError(f"fidelity has imaginary part {val.imag:.3g}")
    return float(val.real)


def lz_probability(X: float, v: float) -> float:
    """Asymptotic Landau-Zener survival probability ``1 - exp(-pi X^2 / 2v)``."""
    if not v > 0:
        raise ValueError("v must be positive")
    return float(-np.expm1(-np.pi * X * X / (2 * v)))


def wubs_asymptotic(X: float, gamma: float, v: float) -> float:
    """Zero-temperature infinite-time fidelity with the bath-enhanced gap
    ``W^2 = X^2 + gamma``."""
    if not v > 0:
        raise ValueError("v must be positive")
    return float(-np.expm1(-np.pi * (X * X + gamma) / (2 * v)))


def find_extrema(x, y, noise_floor: float = 1e-3) -> list:
    """Interior local extrema of a sampled curve, ignoring wiggles smaller
    than ``noise_floor``.

    A turning point is only reported once the curve has moved away from it
    by more than ``noise_floor``; end points are never reported.

    Returns
    -------
    list of dict
        ``{"x": ..., "y": ..., "kind": "min" | "max"}`` in order of ``x``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError("x and y must have the same length")
    if len(x) < 3:
        raise ValueError("need at least 3 samples")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly increasing")

    out = []
    trend = 0
    lo = hi = 0
    cand = 0
    for i in range(1, len(y)):
        if trend == 0:
            if y[i] < y[lo]:
                lo = i
            if y[i] > y[hi]:
                hi = i
            if y[i] - y[lo] > noise_floor:
                trend, cand = 1, i
            elif y[hi] - y[i] > noise_floor:
                trend, cand = -1, i
        elif trend == 1:
            if y[i] > y[cand]:
                cand = i
            elif y[cand] - y[i] > noise_floor:
                out.append({"x": float(x[cand]), "y": float(y[cand]), "kind": "max"})
                trend, cand = -1, i
        else:
            if y[i] < y[cand]:
                cand = i
            elif y[i] - y[cand] > noise_floor:
                out.append({"x": float(x[cand]), "y": float(y[cand]), "kind": "min"})
                trend, cand = 1, i
    return out
