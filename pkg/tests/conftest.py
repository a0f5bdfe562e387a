import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record ``check(ok, detail)`` as a PASS/FAIL line, then assert."""
    label = request.node.get_closest_marker("criterion").args[0]

    def check(ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion identifier")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
