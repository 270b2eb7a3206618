import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid64():
    from couette_lab.spectral import build_grid
    return build_grid(64)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one part of an acceptance criterion; returns ``ok`` for asserting."""
    def record(number: int, ok: bool, detail: str) -> bool:
        _CRITERIA.setdefault(number, []).append((bool(ok), detail))
        print(f"criterion {number} {'PASS' if ok else 'FAIL'}: {detail}")
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        parts = _CRITERIA[number]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {verdict}: " + "; ".join(d for _, d in parts))
