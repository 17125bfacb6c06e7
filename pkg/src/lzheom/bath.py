"""Zero-temperature Lorentzian bath: spectral density, correlation function
and its exact two-exponential decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import SIGMA_X, SIGMA_Z


@dataclass(frozen=True)
class BathSpec:
    """Lorentz-broadened cavity mode coupled through ``V = gz sz + gx sx``.

    ``gamma`` is the integrated coupling strength, ``lam`` the broadening
    (inverse correlation time) and ``omega_c`` the centre frequency.
    """

    gamma: float = 0.0
    lam: float = 0.5
    omega_c: float = 0.5
    gz: float = 0.0
    gx: float = 0.5

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")

    @property
    def coupling_operator(self) -> np.ndarray:
        return self.gz * SIGMA_Z + self.gx * SIGMA_X


@dataclass(frozen=True)
class ExponentialDecomposition:
    """``C(t) = sum_k cR_k e^{-nu_k t} + i sum_k cI_k e^{-nu_k t} / i``.

    ``c_imag`` stores the real prefactors ``(-1)^k gamma/2`` of the imaginary
    part, so that ``C^I(t) = sum_k c_imag[k] e^{-nu_k t} / i``.
    """

    nu: np.ndarray
    c_real: np.ndarray
    c_imag: np.ndarray

    def real_part(self, t):
        e = np.exp(-np.multiply.outer(np.asarray(t, dtype=float), self.nu))
        return np.real(e @ self.c_real)

    def imag_part(self, t):
        e = np.exp(-np.multiply.outer(np.asarray(t, dtype=float), self.nu))
        return np.real(e @ self.c_imag / 1j)

    def reconstruct(self, t):
        return self.real_part(t) + 1j * self.imag_part(t)


def spectral_density(omega, spec: BathSpec):
    omega = np.asarray(omega, dtype=float)
    return spec.gamma * spec.lam / np.pi / ((omega - spec.omega_c) ** 2 + spec.lam**2)


def correlation(t, spec: BathSpec):
    """Vacuum correlation ``gamma * exp(-(lam + i omega_c) t)`` for ``t >= 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("correlation is defined for t >= 0; fold with |t2 - t1|")
    c = spec.gamma * np.exp(-(spec.lam + 1j * spec.omega_c) * t)
    return complex(c) if c.ndim == 0 else c


def decompose(spec: BathSpec) -> ExponentialDecomposition:
    """Exact two-term split with ``nu = (lam - i wc, lam + i wc)``."""
    nu = np.array([spec.lam - 1j * spec.omega_c, spec.lam + 1j * spec.omega_c])
    half = spec.gamma / 2
    return ExponentialDecomposition(
        nu=nu,
        c_real=np.array([half, half]),
        c_imag=np.array([-half, half]),
    )
