import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("lab", max_examples=40, deadline=None)
settings.load_profile("lab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def report(request):
    """Record one acceptance line; the lines are printed in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def add(name: str, ok: bool, detail: str):
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    return add


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
