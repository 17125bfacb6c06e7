"""Hierarchy of auxiliary density operators (ADOs) for a qubit coupled to a
zero-temperature Lorentzian bath, with fixed-step RK4 time evolution.

For a multi-index ``n = (n1, n2)`` the ADOs obey

    d/dt r_n = -(i H^x + n.nu) r_n
               - i sum_k V^x r_{n+e_k}
               - i (gamma/2) sum_k n_k [V^x + (-1)^k V^o] r_{n-e_k}

with ``nu = (lam - i wc, lam + i wc)``. The hierarchy is truncated
triangularly (``n1 + n2 <= depth``); at the top layer the couplings to deeper
ADOs are simply dropped. ``r_(0,0)`` is the reduced density matrix.

Implementation notes
--------------------
The ADOs live in one flat complex vector, 4 entries (row-major 2x2) per index
in graded-lexicographic order. Everything except the system Hamiltonian is
time independent and is assembled once into a sparse matrix; the Hamiltonian
part acts block-diagonally and is applied as ``Y @ K(t).T`` on the
``(n_ados, 4)`` view, with ``K(t) = -i (H (x) 1 - 1 (x) H^T)``.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from .bath import BathSpec, decompose
from .observables import FidelityTrace
from .operators import IDENTITY, PAULIS, projector
from ._kernel import rk4_hierarchy
from .protocols import ProtocolSpec, bias, field_coefficients, ground_state

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 20
STABILITY_LIMIT = 0.1
# entries of a density matrix are bounded by 1; anything beyond this has diverged
BLOWUP_BOUND = 10.0


class NumericalFailure(RuntimeError):
    """Integration produced non-finite values or a diverging reduced state."""


class ConvergenceError(RuntimeError):
    """``auto_converge`` ran out of depth (or dt refinement) before agreement."""

    def __init__(self, message, last_delta=None, report=None):
        super().__init__(message)
        self.last_delta = last_delta
        self.report = report


class StabilityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class HierarchyIndexSet:
    """Triangular index set ``{(n1, n2): n1 + n2 <= depth}`` with neighbour tables.

    ``up[i, k]`` / ``down[i, k]`` hold the position of ``n +/- e_k`` or the
    sentinel ``len(indices)`` when that neighbour does not exist.
    """

    depth: int
    indices: tuple
    up: np.ndarray
    down: np.ndarray

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def sentinel(self) -> int:
        return len(self.indices)

    @property
    def counts(self) -> np.ndarray:
        return np.array(self.indices, dtype=float).reshape(-1, 2)

    def position(self, n) -> int:
        return self.indices.index(tuple(n))


def build_hierarchy(depth: int) -> HierarchyIndexSet:
    if depth < 0:
        raise ValueError("depth must be >= 0")
    indices = tuple(
        (n1, total - n1) for total in range(depth + 1) for n1 in range(total, -1, -1)
    )
    where = {n: i for i, n in enumerate(indices)}
    missing = len(indices)
    up = np.full((missing, 2), missing, dtype=np.intp)
    down = np.full((missing, 2), missing, dtype=np.intp)
    for i, (n1, n2) in enumerate(indices):
        up[i, 0] = where.get((n1 + 1, n2), missing)
        up[i, 1] = where.get((n1, n2 + 1), missing)
        down[i, 0] = where.get((n1 - 1, n2), missing)
        down[i, 1] = where.get((n1, n2 - 1), missing)
    return HierarchyIndexSet(depth=depth, indices=indices, up=up, down=down)


@dataclass(frozen=True)
class SimulationConfig:
    protocol: ProtocolSpec
    bath: BathSpec
    depth: int = DEFAULT_DEPTH
    dt: float = 1e-3
    sample_every: int = 100
    # "ground_adiabatic" or an explicit 2x2 density matrix
    initial_state: Union[str, np.ndarray] = "ground_adiabatic"

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.protocol.tf / self.dt - 1e-9)))

    def initial_density(self) -> np.ndarray:
        if isinstance(self.initial_state, str):
            if self.initial_state != "ground_adiabatic":
                raise ValueError(f"unknown initial state {self.initial_state!r}")
            sched = self.protocol.schedule
            return projector(ground_state(sched.z0, self.protocol.X))
        rho = np.asarray(self.initial_state, dtype=complex)
        if rho.shape != (2, 2):
            raise ValueError("explicit initial state must be 2x2")
        return rho


@dataclass
class HierarchyState:
    index_set: HierarchyIndexSet
    ados: np.ndarray  # (n_ados, 2, 2)
    t: float = 0.0

    @classmethod
    def initial(cls, index_set: HierarchyIndexSet, rho0: np.ndarray) -> "HierarchyState":
        ados = np.zeros((index_set.size, 2, 2), dtype=complex)
        ados[0] = rho0
        return cls(index_set=index_set, ados=ados, t=0.0)

    @property
    def rho(self) -> np.ndarray:
        return self.ados[0]


def _left(a):
    return np.kron(a, IDENTITY)


def _right(a):
    return np.kron(IDENTITY, a.T)


# -i (s (x) 1 - 1 (x) s^T) for each Pauli: the commutator generator per unit field
_KT_PAULI = np.stack([(-1j * (_left(s) - _right(s))).T for s in PAULIS])


def static_generator(index_set: HierarchyIndexSet, bath: BathSpec) -> sp.csr_matrix:
    """Sparse matrix of every time-independent term of the hierarchy."""
    V = bath.coupling_operator
    nu = decompose(bath).nu
    gamma = bath.gamma
    M = index_set.size
    counts = index_set.counts
    vcomm = -1j * (_left(V) - _right(V))
    # k=1: V^x - V^o = -2 (. V);   k=2: V^x + V^o = 2 (V .)
    down_ops = (1j * gamma * _right(V), -1j * gamma * _left(V))

    rows, cols, blocks = [], [], []
    for i in range(M):
        rows.append(i)
        cols.append(i)
        blocks.append(-(counts[i] @ nu) * np.eye(4))
        for k in range(2):
            j = index_set.up[i, k]
            if j < M and gamma != 0.0:
                rows.append(i)
                cols.append(j)
                blocks.append(vcomm)
            j = index_set.down[i, k]
            if j < M:
                rows.append(i)
                cols.append(j)
                blocks.append(counts[i, k] * down_ops[k])
    mat = sp.bsr_matrix(
        (np.array(blocks), np.array(cols), _indptr(rows, M)), shape=(4 * M, 4 * M)
    ).tocsr()
    mat.eliminate_zeros()
    return mat


def _indptr(rows, n_rows):
    return np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n_rows))])


def _kt(hx, hy, hz):
    return hx * _KT_PAULI[0] + hy * _KT_PAULI[1] + hz * _KT_PAULI[2]


def rhs(t: float, state: HierarchyState, cfg: SimulationConfig) -> np.ndarray:
    """Time derivative of every ADO, shape ``(n_ados, 2, 2)``.

    Convenience entry point (rebuilds the static generator); the integrator
    uses the same operators without the per-call setup.
    """
    if state.index_set.depth != cfg.depth:
        raise ValueError("state depth does not match cfg.depth")
    y = state.ados.reshape(-1)
    if not np.all(np.isfinite(y)):
        raise NumericalFailure(f"non-finite ADO entries at t={t}")
    A0 = static_generator(state.index_set, cfg.bath)
    hx, hy, hz = (float(c) for c in field_coefficients(t, cfg.protocol))
    dy = A0 @ y + (y.reshape(-1, 4) @ _kt(hx, hy, hz)).ravel()
    return dy.reshape(-1, 2, 2)


def _stability_number(cfg: SimulationConfig, coeffs) -> float:
    hx, hy, hz = coeffs
    h_peak = float(np.max(np.sqrt(hx**2 + hy**2 + hz**2)))
    nu_abs = float(np.abs(decompose(cfg.bath).nu).max())
    return cfg.dt * max(h_peak, cfg.depth * nu_abs)


def sample_steps(n_steps: int, sample_every: int) -> np.ndarray:
    steps = np.arange(0, n_steps + 1, sample_every)
    if steps[-1] != n_steps:
        steps = np.append(steps, n_steps)
    return steps


def _propagate(y, A0, coeffs, dt, n_steps, sample_every, sample_hook):
    """Fixed-step RK4 for ``y' = A0 y + (Y @ K(t).T)`` with the field
    coefficients given on the half-step grid; calls ``sample_hook(step, y)``
    on every sampled step (including 0 and ``n_steps``)."""
    hx, hy, hz = coeffs
    n4 = y.size // 4
    half = 0.5 * dt
    sixth = dt / 6.0
    matvec = A0.dot
    sample_hook(0, y)
    for step in range(n_steps):
        j = 2 * step
        K0 = _kt(hx[j], hy[j], hz[j])
        K1 = _kt(hx[j + 1], hy[j + 1], hz[j + 1])
        K2 = _kt(hx[j + 2], hy[j + 2], hz[j + 2])
        k1 = matvec(y) + (y.reshape(n4, 4) @ K0).ravel()
        y1 = y + half * k1
        k2 = matvec(y1) + (y1.reshape(n4, 4) @ K1).ravel()
        y2 = y + half * k2
        k3 = matvec(y2) + (y2.reshape(n4, 4) @ K1).ravel()
        y3 = y + dt * k3
        k4 = matvec(y3) + (y3.reshape(n4, 4) @ K2).ravel()
        y = y + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        if (step + 1) % sample_every == 0 or step + 1 == n_steps:
            sample_hook(step + 1, y)
    return y


def evolve(cfg: SimulationConfig, keep_ados: bool = False,
           backend: str = "compiled") -> FidelityTrace:
    """Integrate the hierarchy from ``t = 0`` to ``tf`` and sample the fidelity.

    ``backend="compiled"`` runs the numba RK4 loop; ``"sparse"`` runs the same
    scheme through the scipy sparse generator (slower, used as a cross-check).

    Raises
    ------
    NumericalFailure
        If any ADO becomes NaN/Inf or the reduced state leaves the bounded
        region (too large ``dt``, or a truncation that is unstable at strong
        coupling).
    """
    protocol = cfg.protocol
    n_steps = cfg.n_steps
    dt = protocol.tf / n_steps
    steps = sample_steps(n_steps, cfg.sample_every)
    times = steps * dt
    times[-1] = protocol.tf

    grid = np.minimum(np.arange(2 * n_steps + 1) * (0.5 * dt), protocol.tf)
    hx, hy, hz = field_coefficients(grid, protocol)
    s = _stability_number(replace(cfg, dt=dt), (hx, hy, hz))
    if s > STABILITY_LIMIT:
        warnings.warn(
            f"dt*max(|H|, N|nu|) = {s:.3g} exceeds {STABILITY_LIMIT}", StabilityWarning,
            stacklevel=2,
        )

    index_set = build_hierarchy(cfg.depth)
    M = index_set.size
    rho0 = cfg.initial_density()
    start = time.perf_counter()
    if backend == "compiled":
        y = np.zeros((M + 1, 2, 2), dtype=complex)
        y[0] = rho0
        counts = index_set.counts
        nnu = counts @ decompose(cfg.bath).nu
        rhos = np.empty((len(steps), 2, 2), dtype=complex)
        written = rk4_hierarchy(
            y, hx, hy, hz, dt, n_steps, cfg.sample_every,
            cfg.bath.coupling_operator, float(cfg.bath.gamma), nnu,
            counts[:, 0].copy(), counts[:, 1].copy(), index_set.up, index_set.down, rhos,
            BLOWUP_BOUND,
        )
        if written < 0:
            k = -written - 1
            raise NumericalFailure(
                f"hierarchy diverged at t={times[k]:.6g} (depth={cfg.depth}, dt={dt:.3g})"
            )
        ados = y[:M]
    elif backend == "sparse":
        A0 = static_generator(index_set, cfg.bath)
        rhos = np.empty((len(steps), 2, 2), dtype=complex)
        slot = iter(range(len(steps)))

        def hook(step, vec):
            if not np.all(np.isfinite(vec)) or np.max(np.abs(vec[:4])) > BLOWUP_BOUND:
                raise NumericalFailure(
                    f"hierarchy diverged at t={step * dt:.6g} (depth={cfg.depth}, dt={dt:.3g})"
                )
            rhos[next(slot)] = vec[:4].reshape(2, 2)

        state = HierarchyState.initial(index_set, rho0)
        vec = _propagate(state.ados.reshape(-1).copy(), A0, (hx, hy, hz), dt, n_steps,
                         cfg.sample_every, hook)
        ados = vec.reshape(-1, 2, 2)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    wall = time.perf_counter() - start

    Z = bias(times, protocol.schedule)[0]
    meta = {"method": "heom", "depth": cfg.depth, "dt": dt, "n_ados": M, "wall_s": wall}
    trace = FidelityTrace.from_states(times, rhos, Z, protocol.X, meta=meta)
    if keep_ados:
        trace.meta["ados"] = ados.copy()
    return trace


def max_fidelity_delta(a: FidelityTrace, b: FidelityTrace) -> float:
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-9):
        raise ValueError("traces are sampled on different grids")
    return float(np.max(np.abs(a.fidelity - b.fidelity)))


def auto_converge(
    cfg: SimulationConfig,
    fidelity_tol: float = 1e-4,
    max_depth: int = 80,
    depth_step: int = 2,
    check_dt: bool = True,
) -> dict:
    """Deepen the hierarchy from ``cfg.depth`` in steps of ``depth_step`` until
    two consecutive depths agree to ``fidelity_tol`` at every sample, then
    confirm that halving the time step moves no sample by more than the same
    tolerance.

    A depth whose truncation blows up (NaN/Inf) counts as not converged.

    Returns
    -------
    dict
        ``trace`` (the run at ``depth_used``), ``depth_used`` and ``report``
        with the per-depth deltas and the dt check.

    Raises
    ------
    ConvergenceError
        If ``max_depth`` is exceeded or the half-step check fails; carries
        the last measured delta.
    """
    if not fidelity_tol > 0:
        raise ValueError("fidelity_tol must be positive")
    report = {"fidelity_tol": fidelity_tol, "depths": [], "deltas": [], "failures": []}

    def attempt(depth):
        report["depths"].append(depth)
        try:
            return evolve(replace(cfg, depth=depth))
        except NumericalFailure as exc:
            report["failures"].append(depth)
            logger.debug("depth %d unstable: %s", depth, exc)
            return None

    depth = cfg.depth
    prev = attempt(depth)
    delta = None
    while True:
        nxt_depth = depth + depth_step
        if nxt_depth > max_depth:
            raise ConvergenceError(
                f"no convergence up to depth {max_depth} (last delta {delta})",
                last_delta=delta, report=report,
            )
        nxt = attempt(nxt_depth)
        if prev is not None and nxt is not None:
            delta = max_fidelity_delta(prev, nxt)
            report["deltas"].append(delta)
            logger.debug("depth %d -> %d: max |dF| = %.3g", depth, nxt_depth, delta)
            if delta < fidelity_tol:
                break
        depth, prev = nxt_depth, nxt

    report["depth_used"] = depth
    report["last_delta"] = delta
    if check_dt:
        fine_cfg = replace(cfg, depth=depth, dt=cfg.protocol.tf / (2 * cfg.n_steps),
                           sample_every=2 * cfg.sample_every)
        try:
            fine = evolve(fine_cfg)
            dt_delta = max_fidelity_delta(prev, fine)
        except NumericalFailure:
            dt_delta = float("inf")
        report["dt_delta"] = dt_delta
        if not dt_delta < fidelity_tol:
            raise ConvergenceError(
                f"halving dt changed F by {dt_delta:.3g} at depth {depth}",
                last_delta=dt_delta, report=report,
            )
    prev.meta["converged"] = True
    prev.meta["depth_used"] = depth
    return {"trace": prev, "depth_used": depth, "report": report}
