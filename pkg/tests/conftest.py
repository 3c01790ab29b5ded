import pytest

from bdcat.model import CatastropheRates, RateSchedule

_ACCEPTANCE: list[str] = []


def record_acceptance(label: str, ok: bool, detail: str):
    _ACCEPTANCE.append(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def standard():
    """Constant rates lambda=1, mu=1.25 with alpha=0.4, beta=0.3."""
    return RateSchedule.constant(1.0, 1.25), CatastropheRates(0.4, 0.3)


@pytest.fixture(scope="session")
def recorder():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
