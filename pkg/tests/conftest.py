import pytest

from mirrorstate.config import table1


@pytest.fixture(scope="session")
def p():
    """Reference parameter set shipped with the package."""
    return table1()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Call ``verdict(label, ok, detail)``; the line is printed immediately and
    repeated in the terminal summary, and a failing verdict fails the test.
    """
    lines = request.config.stash.setdefault(_LINES, [])

    def record(label: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        lines.append(line)
        print(line)
        assert ok, line

    return record


_LINES = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
