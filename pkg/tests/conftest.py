from __future__ import annotations

import pytest

from qhm.core import Grid, ManifoldParams

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def params() -> ManifoldParams:
    return ManifoldParams()


@pytest.fixture(scope="session")
def grid() -> Grid:
    return Grid()


@pytest.fixture
def record():
    """``record(n, measured, bound, ok)`` stores one acceptance line and asserts ``ok``."""

    def _record(n: int, detail: str, ok: bool) -> None:
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, f"criterion {n}: {detail}"

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:>2}: {detail}")
