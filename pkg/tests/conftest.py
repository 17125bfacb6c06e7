import numpy as np
import pytest

from lzheom.bath import BathSpec
from lzheom.heom import SimulationConfig
from lzheom.protocols import BiasSchedule, ProtocolSpec


def make_sim(mode="lz", tf=1.0, gamma=0.5, depth=6, dt=1e-3, sample_every=50,
             kind=None, t_D=None, **bath):
    kind = kind or ("quintic" if mode == "tcd" else "linear")
    protocol = ProtocolSpec(BiasSchedule(kind, tf=tf), mode=mode, t_D=t_D)
    return SimulationConfig(protocol=protocol, bath=BathSpec(gamma=gamma, **bath),
                            depth=depth, dt=dt, sample_every=sample_every)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density(rng, d=2):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
