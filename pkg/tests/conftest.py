import numpy as np
import pytest

ACCEPTANCE_LINES = []


def record_criterion(label: str, passed: bool, detail: str = ""):
    word = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{word}] {label}" + (f" -- {detail}" if detail else ""))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
