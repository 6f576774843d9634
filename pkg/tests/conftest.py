import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by this test")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            num, title = m.args
            _CRITERIA.setdefault(num, {"title": title, "outcomes": [], "seen": False})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    entry = _CRITERIA[m.args[0]]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        entry["seen"] = True
        entry["outcomes"].append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        entry = _CRITERIA[num]
        if not entry["seen"]:
            status = "NOT RUN"
        elif all(o == "passed" for o in entry["outcomes"]):
            status = "PASS"
        else:
            status = "FAIL"
        tr.write_line(f"criterion {num:2d}: {status:7s} {entry['title']}")
