import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fractalmark.synthetic import desk_corpus

settings.register_profile(
    "repo", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def desk():
    return desk_corpus(10, size=256, seed=2024)


@pytest.fixture(scope="session")
def art(desk):
    return desk[0]


@pytest.fixture(scope="session")
def art512():
    return desk_corpus(1, size=512, seed=7)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
