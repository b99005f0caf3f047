import pytest

_outcomes = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_outcomes] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and report.passed):
        return
    number, title = marker.args
    results = item.config.stash[_outcomes].setdefault(number, {"title": title, "tests": {}})
    passed = report.passed and results["tests"].get(item.name, True)
    results["tests"][item.name] = passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = config.stash[_outcomes]
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(outcomes):
        entry = outcomes[number]
        failed = [name for name, ok in entry["tests"].items() if not ok]
        status = "FAIL" if failed else "PASS"
        detail = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {number} {status}: {entry['title']}{detail}")
