import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lzheom.observables import (
    FidelityTrace, find_extrema, lz_probability, survival_fidelity, wubs_asymptotic,
)
from lzheom.operators import IDENTITY, KET_DOWN, KET_UP, projector
from lzheom.protocols import ground_state


def test_survival_fidelity_examples():
    assert survival_fidelity(projector(KET_UP), -1e6, 0.5) == pytest.approx(1)
    assert survival_fidelity(projector(KET_DOWN), 1e6, 0.5) == pytest.approx(1)
    assert survival_fidelity(IDENTITY / 2, 0.3, 0.5) == pytest.approx(0.5)
    psi = ground_state(0.0, 0.5)
    np.testing.assert_allclose(psi, np.array([-1, 1]) / np.sqrt(2))
    assert survival_fidelity(projector(psi), 0.0, 0.5) == pytest.approx(1)


def test_survival_fidelity_rejects_invalid_states():
    with pytest.raises(ValueError):
        survival_fidelity(np.array([[1, 0.2j], [0, 0]]), 0.0, 0.5)
    with pytest.raises(ValueError):
        survival_fidelity(np.eye(3) / 3, 0.0, 0.5)
    with pytest.raises(ValueError):
        survival_fidelity(IDENTITY / 2, 0.0, 0.0)


def test_lz_formula():
    # X = 0.5, v = 12/100
    assert lz_probability(0.5, 0.12) == pytest.approx(0.962, abs=5e-4)
    assert wubs_asymptotic(0.5, 0.0, 0.12) == lz_probability(0.5, 0.12)
    assert wubs_asymptotic(0.5, 1.0, 0.12) > lz_probability(0.5, 0.12)
    with pytest.raises(ValueError):
        lz_probability(0.5, 0)


def test_trace_from_states():
    states = np.stack([projector(KET_UP), IDENTITY / 2])
    tr = FidelityTrace.from_states([0.0, 1.0], states, np.array([-1e6, 0.0]), 0.5)
    np.testing.assert_allclose(tr.fidelity, [1, 0.5])
    np.testing.assert_allclose(tr.purity, [1, 0.5])
    assert tr.final_fidelity == pytest.approx(0.5)
    assert tr.invariant_violations() == []
    bad = FidelityTrace.from_states([0.0], np.diag([1.2, -0.2])[None], np.array([0.0]), 0.5)
    assert len(bad.invariant_violations()) == 2


def test_find_extrema_examples():
    x = np.linspace(0, 2 * np.pi, 101)
    ext = find_extrema(x, np.sin(x))
    assert [e["kind"] for e in ext] == ["max", "min"]
    assert ext[0]["x"] == pytest.approx(np.pi / 2, abs=0.07)
    assert find_extrema(x, x) == []
    assert find_extrema(x, -x**2) == []


def test_find_extrema_ignores_small_wiggles():
    x = np.linspace(0, 1, 200)
    y = 0.7 + 2e-4 * np.sin(40 * x)
    assert find_extrema(x, y, noise_floor=1e-3) == []
    assert find_extrema(x, y, noise_floor=1e-5) != []


def test_find_extrema_min_then_max():
    x = np.geomspace(0.01, 20, 25)
    y = 0.9 - 0.3 * np.exp(-np.log(x / 2) ** 2) + 0.1 * np.exp(-np.log(x / 10) ** 2 * 4)
    assert [e["kind"] for e in find_extrema(x, y)] == ["min", "max"]


def test_find_extrema_input_checks():
    with pytest.raises(ValueError):
        find_extrema([0, 1], [0, 1])
    with pytest.raises(ValueError):
        find_extrema([0, 1, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        find_extrema([0, 1, 2], [0, 1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=3, max_size=40))
def test_find_extrema_properties(values):
    y = np.array(values)
    x = np.arange(len(y), dtype=float)
    ext = find_extrema(x, y, 0.05)
    kinds = [e["kind"] for e in ext]
    assert all(a != b for a, b in zip(kinds, kinds[1:]))
    for e in ext:
        assert 0 < e["x"] < len(y) - 1
    assert find_extrema(x, np.sort(y), 0.05) == []
