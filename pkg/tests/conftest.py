import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")

# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
