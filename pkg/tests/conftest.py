import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report(capsys):
    """Record and print one pass/fail line for an acceptance criterion, then assert it."""
    def _report(number, title, ok, detail):
        line = f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
