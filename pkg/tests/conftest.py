import numpy as np
import pytest

from sudocs.measure import gen_phi1
from sudocs.model import SignalModel, sample_signal


@pytest.fixture
def small_instance():
    """A 400-coefficient signal and a matching sparse Part-1 matrix."""
    x = sample_signal(SignalModel(s=0.05), 400, seed=3).values
    phi1 = gen_phi1(120, 400, 0.05, 1.0, seed=3)
    return x, phi1


def pytest_configure(config):
    np.set_printoptions(precision=6, suppress=True)


_CRITERIA = {}


@pytest.fixture
def report_criterion():
    """Record ``(number, passed, detail)`` for the end-of-run acceptance table."""
    def report(number, passed, detail=""):
        _CRITERIA[number] = (bool(passed), detail)
        return bool(passed)
    return report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
