import pytest

_LINES = {}


@pytest.fixture
def criterion(request):
    """Record ``(number, title, detail)`` for the acceptance summary."""
    entry = {"detail": ""}
    _LINES[request.node.nodeid] = entry

    def record(number, title, detail=""):
        entry.update(number=number, title=title, detail=detail)

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    entry = _LINES.get(item.nodeid)
    if entry is not None and (rep.when == "call" or rep.failed):
        entry.setdefault("passed", True)
        entry["passed"] = entry["passed"] and rep.passed


def pytest_terminal_summary(terminalreporter):
    done = [e for e in _LINES.values() if "number" in e and "passed" in e]
    if not done:
        return
    terminalreporter.section("acceptance criteria")
    for e in sorted(done, key=lambda e: e["number"]):
        tag = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"[{tag}] criterion {e['number']:>2}: {e['title']}  ({e['detail']})")
