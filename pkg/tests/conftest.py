import numpy as np
import pytest

from photonlab import fock


@pytest.fixture(scope="session")
def benchmark_inputs():
    return {
        "6::0": fock.noon(6),
        "5::1": fock.mmprime(5, 1),
        "4::2": fock.mmprime(4, 2),
        "HB(6)": fock.holland_burnett(6),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LOG: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LOG


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LOG, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
