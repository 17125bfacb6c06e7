"""Pseudomode cross-check: the qubit plus one explicit damped bosonic mode.

A single mode of frequency ``omega_c``, amplitude damping rate ``2*lam`` and
coupling ``sqrt(gamma)`` through ``V (x) (a + a^dag)`` has the vacuum
correlation ``gamma * exp(-(lam + i omega_c) t)``, the same Gaussian
environment the hierarchy describes. Its Lindblad equation is integrated by
brute force on the truncated ``2 * n_fock`` dimensional space, so agreement
with the hierarchy is an independent check of both.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bath import BathSpec
from .heom import BLOWUP_BOUND, NumericalFailure, sample_steps
from .observables import FidelityTrace
from .operators import PAULIS, partial_trace_last, projector
from .protocols import bias, field_coefficients, ground_state

LEAKAGE_TOL = 1e-6


@dataclass(frozen=True)
class PseudomodeConfig:
    protocol: ProtocolSpec
    bath: BathSpec
    n_fock: int = 16
    dt: float = 1e-3
    sample_every: int = 100

    def __post_init__(self):
        if self.n_fock < 2:
            raise ValueError("n_fock must be >= 2")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def dim(self) -> int:
        return 2 * self.n_fock

    @property
    def n_steps(self) -> int:
        return max(1, int(np.ceil(self.protocol.tf / self.dt - 1e-9)))


def annihilation(n_fock: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), 1).astype(complex)


def _static_parts(cfg: PseudomodeConfig):
    n = cfg.n_fock
    a = annihilation(n)
    eye_m = np.eye(n, dtype=complex)
    g = np.sqrt(cfg.bath.gamma)
    h_static = (cfg.bath.omega_c * np.kron(np.eye(2), a.conj().T @ a)
                + g * np.kron(cfg.bath.coupling_operator, a + a.conj().T))
    jump = np.kron(np.eye(2), a)
    paulis = [np.kron(s, eye_m) for s in PAULIS]
    return h_static, jump, paulis


def pseudomode_generator(t: float, cfg: PseudomodeConfig) -> dict:
    """Composite Hamiltonian and the single Lindblad channel at time ``t``."""
    h_static, jump, paulis = _static_parts(cfg)
    hx, hy, hz = (float(c) for c in field_coefficients(float(t), cfg.protocol))
    H = h_static + hx * paulis[0] + hy * paulis[1] + hz * paulis[2]
    return {"H_total": H, "jump_rate": 2.0 * cfg.bath.lam, "jump_operator": jump}


def mode_correlation(times, bath: BathSpec, n_fock: int = 16) -> np.ndarray:
    """Vacuum two-time correlation ``<B(t) B(0)>`` of ``B = sqrt(gamma)(a + a^dag)``
    for the damped mode alone, via the quantum regression theorem."""
    a = annihilation(n_fock)
    eye = np.eye(n_fock)
    H = bath.omega_c * a.conj().T @ a
    rate = 2.0 * bath.lam
    ad = a.conj().T
    n_op = ad @ a
    # row-major vec: vec(A X B) = (A kron B^T) vec(X)
    L = (-1j * (np.kron(H, eye) - np.kron(eye, H.T))
         + rate * (np.kron(a, a.conj())
                   - 0.5 * np.kron(n_op, eye) - 0.5 * np.kron(eye, n_op.T)))
    B = np.sqrt(bath.gamma) * (a + ad)
    vac = np.zeros((n_fock, n_fock), dtype=complex)
    vac[0, 0] = 1
    chi0 = (B @ vac).ravel()
    out = []
    for t in np.atleast_1d(times):
        chi = (scipy.linalg.expm(L * t) @ chi0).reshape(n_fock, n_fock)
        out.append(np.trace(B @ chi))
    return np.array(out)


def evolve_pseudomode(cfg: PseudomodeConfig) -> FidelityTrace:
    """RK4 integration of the composite Lindblad equation from
    ``|psi_g(0)><psi_g(0)| (x) |0><0|``.

    The returned trace carries ``meta["cutoff_limited"]``, set when the top
    Fock level ever holds more than ``LEAKAGE_TOL`` population.
    """
    protocol = cfg.protocol
    n = cfg.n_fock
    n_steps = cfg.n_steps
    dt = protocol.tf / n_steps
    steps = sample_steps(n_steps, cfg.sample_every)
    times = steps * dt
    times[-1] = protocol.tf

    h_static, jump, paulis = _static_parts(cfg)
    rate = 2.0 * cfg.bath.lam
    jd = jump.conj().T
    # -i H_eff rho + h.c. + rate J rho J^dag with H_eff = H - i rate/2 J^dag J
    damp = 0.5 * rate * (jd @ jump)
    g_static = -1j * h_static - damp
    g_paulis = [-1j * p for p in paulis]

    grid = np.arange(2 * n_steps + 1) * (0.5 * dt)
    hx, hy, hz = field_coefficients(np.minimum(grid, protocol.tf), protocol)

    def gen(i):
        return g_static + hx[i] * g_paulis[0] + hy[i] * g_paulis[1] + hz[i] * g_paulis[2]

    def f(G, rho):
        grho = G @ rho
        return grho + grho.conj().T + rate * (jump @ rho @ jd)

    psi = ground_state(protocol.schedule.z0, protocol.X)
    vac = np.zeros(n, dtype=complex)
    vac[0] = 1
    rho = projector(np.kron(psi, vac))

    top = np.kron(np.eye(2), projector(np.eye(n)[-1]))
    rhos = np.empty((len(steps), 2, 2), dtype=complex)
    leak = 0.0
    k = 0

    def record(rho, step):
        nonlocal k, leak
        if not np.all(np.isfinite(rho)) or np.max(np.abs(rho)) > BLOWUP_BOUND:
            raise NumericalFailure(f"pseudomode state diverged at t={step * dt:.6g}")
        rhos[k] = partial_trace_last(rho, 2, n)
        leak = max(leak, float(np.real(np.trace(top @ rho))))
        k += 1

    start = time.perf_counter()
    record(rho, 0)
    for step in range(n_steps):
        G0, G1, G2 = gen(2 * step), gen(2 * step + 1), gen(2 * step + 2)
        k1 = f(G0, rho)
        k2 = f(G1, rho + 0.5 * dt * k1)
        k3 = f(G1, rho + 0.5 * dt * k2)
        k4 = f(G2, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if (step + 1) % cfg.sample_every == 0 or step + 1 == n_steps:
            record(rho, step + 1)
    wall = time.perf_counter() - start

    Z = bias(times, protocol.schedule)[0]
    meta = {"method": "pseudomode", "n_fock": n, "dt": dt, "top_fock_population": leak,
            "cutoff_limited": leak > LEAKAGE_TOL, "wall_s": wall}
    return FidelityTrace.from_states(times, rhos, Z, protocol.X, meta=meta)


def trace_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Half the trace norm of ``a - b``; works on stacks of matrices."""
    s = np.linalg.svd(np.asarray(a) - np.asarray(b), compute_uv=False)
    return 0.5 * s.sum(axis=-1)


def trace_distance_max(a: FidelityTrace, b: FidelityTrace) -> float:
    if a.states is None or b.states is None:
        raise ValueError("both traces must carry their states")
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-9):
        raise ValueError("traces are sampled on different grids")
    return float(np.max(trace_distance(a.states, b.states)))
