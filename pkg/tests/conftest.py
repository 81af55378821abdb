import pytest

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion(request):
    """Call ``criterion(ok, detail)`` once per acceptance check; prints a PASS/FAIL line."""

    def record(ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  {request.node.name}: {detail}"
        print(line)
        _CRITERIA.append((request.node.name, bool(ok), detail))
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    passed = sum(ok for _, ok, _ in _CRITERIA)
    terminalreporter.write_line(f"{passed}/{len(_CRITERIA)} acceptance checks passed")
