import pytest

from paramarray import pipeline
from paramarray.scenario import Scenario
from paramarray.waveform import SymbolSpec


def scenario_for(f_d=20e3, n_cycles=2, polarity=1, **changes):
    return Scenario(symbol=SymbolSpec(f_d, n_cycles, polarity), **changes)


@pytest.fixture(scope="session")
def tank_8_cycle():
    return pipeline.simulate(scenario_for(20e3, 8, 1))


@pytest.fixture(scope="session")
def tank_8_cycle_minus():
    return pipeline.simulate(scenario_for(20e3, 8, -1))


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line and fail the test if the check failed."""
    def check(label: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
