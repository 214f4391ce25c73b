import math

import pytest

from ramansr.core_model import RB87, PhysicalParams

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ref_params():
    """Reference BEC parameter set: g2 = 5e5 s^-1, kappa = 1.76e12 s^-1, N = 2e6."""
    return PhysicalParams(g2=0.5e6, kappa=1.76e12, N=2.0e6)


@pytest.fixture
def rb87():
    return RB87


@pytest.fixture
def acceptance_report():
    def report(number: int, name: str, passed: bool, detail: str = ""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {name}  {detail}")
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


HALF_PI = math.pi / 2
