from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from ckembed import gallery

settings.register_profile("ck", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ck")


@pytest.fixture
def ex52():
    return gallery.ex52()


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def record(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def rec(number: int, ok: bool, text: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}"
        lines.append(line)
        print(line)
        return ok

    return rec


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
