import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("sgkit", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("sgkit")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def lobeke_sse():
    from sgkit.config import load_config
    from sgkit.generate import build_game

    return build_game(load_config("preset:lobeke_sse"))


@pytest.fixture(scope="session")
def lobeke_sfg():
    from sgkit.config import load_config
    from sgkit.generate import build_game

    return build_game(load_config("preset:lobeke_convergence"))
