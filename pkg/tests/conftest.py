from __future__ import annotations

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

import pytest

ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Append (criterion, passed, detail) lines shown in the terminal summary."""
    log = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(criterion: str, passed: bool, detail: str) -> bool:
        line = f"{criterion} {'PASS' if passed else 'FAIL'} {detail}"
        log.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
