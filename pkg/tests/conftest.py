import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def criterion(request):
    """Record one ``CRITERION k: PASS/FAIL`` line, then assert the outcome."""
    lines = request.config.stash[_LINES]

    def record(k, ok, detail):
        line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}"
        lines.append((k, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
