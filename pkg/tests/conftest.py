from __future__ import annotations

import pytest

from cdsflow.io import generate_workload

_ACCEPTANCE: list[tuple[str, bool | None, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; call ``criterion(label, passed, detail)``.

    ``passed=None`` marks a criterion whose precondition does not hold here.
    """

    def record(label: str, passed: bool | None, detail: str = "") -> bool | None:
        _ACCEPTANCE.append((label, None if passed is None else bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}" + (f" -- {detail}" if detail else ""))


@pytest.fixture(scope="session")
def workload_small():
    return generate_workload(300, 64, seed=11)


@pytest.fixture(scope="session")
def workload_1024():
    return generate_workload(1000, 1024, seed=5)
