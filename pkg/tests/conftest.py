import re

import pytest

VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion and assert it."""

    def record(number: int, text: str, ok: bool):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}"
        print(line)
        request.config.stash.setdefault(VERDICTS, []).append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(VERDICTS, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(re.search(r"criterion (\d+)", s).group(1))):
        terminalreporter.write_line(line)
