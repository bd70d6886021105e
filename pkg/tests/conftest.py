import numpy as np
import pytest

from gctkit.episodes import synth_two_modal

ACCEPTANCE_LINES = []


def record_acceptance(number, name, passed, detail=""):
    ACCEPTANCE_LINES.append((number, f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} {detail}".rstrip()))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def synth_data():
    return synth_two_modal(5, 100, 32, 6.0, 7)
