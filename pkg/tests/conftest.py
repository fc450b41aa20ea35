import numpy as np
import pytest

from ffinverse.invariant import ActionModelParams, TaylorPoly
from ffinverse.quantum import BSGenerator, bs_synthesize, joint_spectrum_coupled

# Taylor invariant used by the synthetic round-trip fixtures
S_STAR = TaylorPoly(2, {(1, 0): 0.3, (0, 1): 0.2, (2, 0): 0.05, (1, 1): -0.04, (0, 2): 0.02})


@pytest.fixture(scope="session")
def s_star():
    return S_STAR


@pytest.fixture(scope="session")
def synth_1e3():
    return bs_synthesize(BSGenerator(ActionModelParams(0.0, S_STAR, -1), [1e-3]))[0]


@pytest.fixture(scope="session")
def synth_2e3():
    return bs_synthesize(BSGenerator(ActionModelParams(0.0, S_STAR, -1), [2e-3]))[0]


@pytest.fixture(scope="session")
def spins30():
    return joint_spectrum_coupled(30, 30, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
