import os
import sys

os.environ.setdefault("SMHE_DEBUG", "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from smhe.keys import keygen  # noqa: E402
from smhe.ring import setup  # noqa: E402


@pytest.fixture(scope="session")
def desk():
    return setup(b"test", "desk")


@pytest.fixture(scope="session")
def small():
    """N = 2^10 with the desk modulus chain: fast enough for per-op tests."""
    return setup(b"test", "desk", N=1024)


@pytest.fixture(scope="session")
def small_ckks():
    return setup(b"test", "desk", scheme="ckks", N=1024)


@pytest.fixture(scope="session")
def small_parties(small):
    rng = np.random.default_rng(2024)
    return [keygen(small, rng, i) for i in range(1, 5)]


@pytest.fixture(scope="session")
def desk_parties(desk):
    rng = np.random.default_rng(7)
    return [keygen(desk, rng, i) for i in range(1, 9)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
