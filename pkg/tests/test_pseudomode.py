from dataclasses import replace

import numpy as np
import pytest

from lzheom.bath import BathSpec, correlation
from lzheom.heom import evolve
from lzheom.operators import IDENTITY, KET_DOWN, KET_UP, is_hermitian, projector
from lzheom.protocols import BiasSchedule, ProtocolSpec
from lzheom.pseudomode import (
    PseudomodeConfig, annihilation, evolve_pseudomode, mode_correlation,
    pseudomode_generator, trace_distance, trace_distance_max,
)

from conftest import make_sim


def pm_config(sim, n_fock=12):
    return PseudomodeConfig(protocol=sim.protocol, bath=sim.bath, n_fock=n_fock,
                            dt=sim.dt, sample_every=sim.sample_every)


def test_annihilation_operator():
    a = annihilation(5)
    np.testing.assert_allclose(np.diag(a.conj().T @ a).real, [0, 1, 2, 3, 4])
    np.testing.assert_allclose(a @ np.eye(5)[1], np.eye(5)[0])


@pytest.mark.parametrize("bath", [BathSpec(gamma=1.0), BathSpec(gamma=2.5, lam=0.3, omega_c=1.1)])
def test_mode_correlation_matches_bath(bath):
    t = np.linspace(0, 10, 11)
    np.testing.assert_allclose(mode_correlation(t, bath), correlation(t, bath), atol=1e-12)


def test_generator_is_hermitian_with_damping_rate():
    sim = make_sim("lz_cd", tf=2.0, gamma=1.0)
    gen = pseudomode_generator(0.3, pm_config(sim))
    assert is_hermitian(gen["H_total"])
    assert gen["jump_rate"] == pytest.approx(1.0)
    assert gen["H_total"].shape == (24, 24)


def test_uncoupled_mode_reproduces_closed_system():
    sim = make_sim("lz", tf=3.0, gamma=0.0, depth=0, dt=1e-3)
    a = evolve(sim)
    b = evolve_pseudomode(pm_config(sim, n_fock=3))
    assert trace_distance_max(a, b) < 1e-12


def test_fock_cutoff_convergence():
    sim = make_sim("lz_cd", tf=1.0, gamma=0.5, dt=1e-3)
    a = evolve_pseudomode(pm_config(sim, n_fock=12))
    b = evolve_pseudomode(pm_config(sim, n_fock=16))
    assert trace_distance_max(a, b) < 1e-5
    assert not b.meta["cutoff_limited"]
    assert np.max(np.abs(b.trace - 1)) < 1e-8
    assert b.invariant_violations() == []


def test_small_cutoff_is_flagged():
    sim = make_sim("lz", tf=3.0, gamma=5.0, dt=1e-3)
    out = evolve_pseudomode(pm_config(sim, n_fock=3))
    assert out.meta["cutoff_limited"]
    assert out.meta["top_fock_population"] > 1e-6


def test_trace_distance_examples():
    up, down = projector(KET_UP), projector(KET_DOWN)
    assert trace_distance(up, down) == pytest.approx(1)
    assert trace_distance(up, up) == 0
    assert trace_distance(IDENTITY / 2, up) == pytest.approx(0.5)
    np.testing.assert_allclose(trace_distance(np.stack([up, up]), np.stack([down, up])), [1, 0],
                               atol=1e-15)


def test_trace_distance_max_requires_matching_grids():
    sim = make_sim("lz", tf=1.0, gamma=0.0, depth=0)
    a = evolve(sim)
    b = evolve(replace(sim, sample_every=10))
    with pytest.raises(ValueError):
        trace_distance_max(a, b)
    a.states = None
    with pytest.raises(ValueError):
        trace_distance_max(a, a)


def test_config_validation():
    proto = ProtocolSpec(BiasSchedule(tf=1.0))
    with pytest.raises(ValueError):
        PseudomodeConfig(proto, BathSpec(), n_fock=1)
    with pytest.raises(ValueError):
        PseudomodeConfig(proto, BathSpec(), dt=0)
