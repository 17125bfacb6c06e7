from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp
from scipy.sparse.linalg import expm_multiply

from lzheom.bath import BathSpec, correlation, decompose
from lzheom.heom import (
    ConvergenceError, HierarchyState, NumericalFailure, StabilityWarning, auto_converge,
    build_hierarchy, evolve, max_fidelity_delta, rhs, sample_steps, static_generator,
)
from lzheom.operators import KET_DOWN, SIGMA_X, projector
from lzheom.protocols import bias, ground_state, hamiltonian

from conftest import make_sim


def comm(a, b):
    return a @ b - b @ a


@pytest.mark.parametrize("depth,size", [(0, 1), (1, 3), (2, 6), (20, 231)])
def test_hierarchy_size(depth, size):
    assert build_hierarchy(depth).size == size


def test_hierarchy_order_and_neighbours():
    idx = build_hierarchy(4)
    assert idx.indices[:6] == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    for i, n in enumerate(idx.indices):
        for k in range(2):
            j = idx.up[i, k]
            if sum(n) == 4:
                assert j == idx.sentinel
            else:
                assert idx.down[j, k] == i
                m = list(n)
                m[k] += 1
                assert idx.indices[j] == tuple(m)
            if n[k] == 0:
                assert idx.down[i, k] == idx.sentinel
    with pytest.raises(ValueError):
        build_hierarchy(-1)


def test_rhs_hand_expanded_depth_one():
    cfg = make_sim("lz", tf=10.0, gamma=0.8, depth=1)
    idx = build_hierarchy(1)
    state = HierarchyState.initial(idx, projector(KET_DOWN))
    state.ados[idx.position((1, 0))] = 0.01 * SIGMA_X
    t = 3.0
    H = hamiltonian(t, cfg.protocol)
    V = 0.5 * SIGMA_X
    g = 0.8
    nu1, nu2 = decompose(cfg.bath).nu
    r0, r10 = state.ados[0], state.ados[1]
    expected = np.array([
        -1j * comm(H, r0) - 1j * comm(V, r10),
        -1j * comm(H, r10) - nu1 * r10 - 1j * (g / 2) * (comm(V, r0) - (V @ r0 + r0 @ V)),
        -1j * (g / 2) * (comm(V, r0) + (V @ r0 + r0 @ V)),
    ])
    np.testing.assert_allclose(rhs(t, state, cfg), expected, atol=1e-15)
    assert nu2 == np.conj(nu1)


def test_rhs_top_layer_has_no_deeper_coupling():
    cfg = make_sim("lz", tf=10.0, gamma=0.8, depth=1)
    idx = build_hierarchy(1)
    state = HierarchyState.initial(idx, np.zeros((2, 2)))
    state.ados[1] = 0.3 * SIGMA_X + 0.1j * np.eye(2)
    H = hamiltonian(0.0, cfg.protocol)
    out = rhs(0.0, state, cfg)
    nu1 = decompose(cfg.bath).nu[0]
    np.testing.assert_allclose(out[1], -1j * comm(H, state.ados[1]) - nu1 * state.ados[1],
                               atol=1e-15)
    np.testing.assert_allclose(out[2], 0, atol=0)


def test_rhs_physical_slot_is_trace_free(rng):
    cfg = make_sim("tcd", tf=2.0, gamma=1.3, depth=3)
    idx = build_hierarchy(3)
    ados = rng.normal(size=(idx.size, 2, 2)) + 1j * rng.normal(size=(idx.size, 2, 2))
    out = rhs(0.7, HierarchyState(idx, ados), cfg)
    assert abs(np.trace(out[0])) < 1e-13


def test_rhs_rejects_non_finite():
    cfg = make_sim(depth=1)
    state = HierarchyState.initial(build_hierarchy(1), np.full((2, 2), np.nan))
    with pytest.raises(NumericalFailure):
        rhs(0.0, state, cfg)


@pytest.mark.parametrize("t", [1.0, 3.0])
def test_pure_dephasing_matches_exact_decoherence(t):
    # H = 0, V = sz: coherence decays as exp(-4 int_0^t (t-u) Re C(u) du)
    bath = BathSpec(gamma=0.5, gz=1.0, gx=0.0)
    idx = build_hierarchy(16)
    y = np.zeros(4 * idx.size, dtype=complex)
    y[:4] = 0.5
    yt = expm_multiply(static_generator(idx, bath) * t, y)
    decay = 4 * quad(lambda u: (t - u) * correlation(u, bath).real, 0, t, epsabs=1e-14)[0]
    assert abs(yt[1] - 0.5 * np.exp(-decay)) < 1e-10
    assert yt[0] == pytest.approx(0.5, abs=1e-14)


def test_closed_system_matches_schrodinger():
    cfg = make_sim("lz", tf=5.0, gamma=0.0, depth=2, dt=1e-3, sample_every=250)
    trace = evolve(cfg, keep_ados=True)
    psi0 = ground_state(-6.0, 0.5)
    sol = solve_ivp(lambda t, y: -1j * hamiltonian(t, cfg.protocol) @ y, (0, 5), psi0,
                    t_eval=trace.times, rtol=1e-11, atol=1e-12)
    Z = bias(trace.times, cfg.protocol.schedule)[0]
    exact = np.abs(np.einsum("ti,it->t", ground_state(Z, 0.5).conj(), sol.y)) ** 2
    np.testing.assert_allclose(trace.fidelity, exact, atol=1e-9)
    np.testing.assert_allclose(trace.purity, 1, atol=1e-9)
    assert np.all(trace.meta["ados"][1:] == 0)


def test_compiled_and_sparse_backends_agree():
    cfg = make_sim("lz_cd", tf=1.0, gamma=1.0, depth=6, dt=2e-3, sample_every=25)
    a = evolve(cfg, backend="compiled")
    b = evolve(cfg, backend="sparse")
    np.testing.assert_allclose(a.states, b.states, atol=1e-13)
    with pytest.raises(ValueError):
        evolve(cfg, backend="gpu")


def test_evolve_invariants_and_meta():
    trace = evolve(make_sim("lz_cd", tf=2.0, gamma=1.0, depth=10, dt=1e-3))
    assert trace.invariant_violations() == []
    assert trace.times[0] == 0 and trace.times[-1] == 2.0
    assert trace.meta["n_ados"] == 66 and trace.meta["depth"] == 10


def test_blow_up_raises_numerical_failure():
    cfg = make_sim("lz", tf=50.0, gamma=1.0, depth=10, dt=0.5, sample_every=1)
    with pytest.warns(StabilityWarning), pytest.raises(NumericalFailure):
        evolve(cfg)


def test_sample_steps_include_the_end():
    assert list(sample_steps(10, 4)) == [0, 4, 8, 10]
    assert list(sample_steps(8, 4)) == [0, 4, 8]


def test_explicit_initial_state():
    rho = np.eye(2) / 2
    cfg = replace(make_sim(gamma=0.0, depth=0), initial_state=rho)
    np.testing.assert_allclose(evolve(cfg).states, np.broadcast_to(rho, (21, 2, 2)), atol=1e-12)
    with pytest.raises(ValueError):
        replace(cfg, initial_state=np.eye(3)).initial_density()


def test_auto_converge_reports_depth():
    cfg = make_sim("lz_cd", tf=1.0, gamma=0.5, depth=2, dt=1e-3)
    result = auto_converge(cfg, fidelity_tol=1e-4)
    report = result["report"]
    assert result["depth_used"] == report["depths"][-2]
    assert report["deltas"][-1] < 1e-4 <= max(report["deltas"][:-1] or [1])
    assert report["dt_delta"] < 1e-4
    deeper = evolve(replace(cfg, depth=result["depth_used"] + 10))
    assert max_fidelity_delta(result["trace"], deeper) < 1e-4


def test_auto_converge_gives_up():
    cfg = make_sim("lz", tf=5.0, gamma=5.0, depth=2, dt=1e-3)
    with pytest.raises(ConvergenceError) as info:
        auto_converge(cfg, fidelity_tol=1e-6, max_depth=6)
    assert info.value.last_delta > 1e-6
    assert info.value.report["depths"] == [2, 4, 6]


@pytest.mark.filterwarnings("ignore::lzheom.heom.StabilityWarning")
def test_auto_converge_skips_unstable_depths():
    cfg = make_sim("lz", tf=5.0, gamma=1.0, depth=4, dt=1e-3)
    with pytest.raises(ConvergenceError) as info:
        auto_converge(replace(cfg, dt=1.0, sample_every=1), max_depth=8)
    assert info.value.report["failures"] == [4, 6, 8]
