import pytest

_criteria = {}


@pytest.fixture
def criterion(request):
    """Record an acceptance criterion's verdict for the end-of-run report.

    Usage: ``criterion(3, "halves signs", ok, "detail")`` then assert ``ok``.
    """

    def record(number, name, ok, detail=""):
        _criteria[number] = (name, bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        name, ok, detail = _criteria[number]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number:>2}. {name}" + (f" -- {detail}" if detail else ""))
