import pytest

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_KEY] = []


@pytest.fixture
def record(request):
    """Store ``(criterion, passed, detail)`` for the acceptance summary."""
    rows = request.config.stash[_KEY]

    def _record(number: int, passed: bool, detail: str) -> None:
        rows.append((number, bool(passed), detail))

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = sorted(config.stash.get(_KEY, []))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in rows:
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
