import pytest

# criterion id -> description, filled by tests marked ``acceptance``
_CRITERIA: dict[str, str] = {}
_OUTCOMES: dict[str, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(id, text): test belongs to an acceptance criterion")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    ident, text = marker.args
    _CRITERIA.setdefault(ident, text)
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _OUTCOMES.setdefault(ident, []).append((item.name, report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for ident in sorted(_CRITERIA, key=lambda k: int(k[2:])):
        results = _OUTCOMES.get(ident, [])
        ok = bool(results) and all(o == "passed" for _, o, _ in results)
        spent = sum(d for _, _, d in results)
        failed = [n for n, o, _ in results if o != "passed"]
        detail = f" (failing: {', '.join(failed)})" if failed else ""
        tr.write_line(f"{ident:<5} {'PASS' if ok else 'FAIL'}  {_CRITERIA[ident]}  [{spent:.1f} s]{detail}")
