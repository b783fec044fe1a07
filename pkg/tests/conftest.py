import pytest

from hetq.model import ModelParams

# grid used throughout: rho x (mu1/mu2), lambda scaled so that mu1 + mu2 = 3
RHOS = (0.1, 0.3, 0.5, 0.7, 0.9)
SPEED_RATIOS = (1, 2, 5, 10)


def grid_params(rho, ratio):
    mu2 = 3.0 / (1 + ratio)
    mu1 = 3.0 - mu2
    return ModelParams(rho * 3.0, mu1, mu2)


GRID = [grid_params(r, k) for r in RHOS for k in SPEED_RATIOS]


@pytest.fixture
def base():
    return ModelParams(1.0, 2.0, 1.0)


_criteria = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, passed, detail)``."""

    def record(number, passed, detail):
        _criteria.append((number, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_criteria, key=lambda c: c[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
