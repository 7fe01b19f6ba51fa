import pytest

ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def record(key: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} {key}: {detail}"
        ACCEPTANCE[key] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
