import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion with a one-line verdict")


@pytest.fixture
def record(request):
    """Attach a measured value to the criterion line of the running test."""
    def _record(text):
        request.node.user_properties.append(("detail", text))
    return _record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        if hasattr(rep, "wasxfail") and rep.skipped:
            status = "FAIL (known, analysed in notes)"
        elif rep.passed:
            status = "PASS"
        else:
            status = "FAIL"
        details = "; ".join(v for k, v in item.user_properties if k == "detail")
        _RESULTS[item.nodeid] = (marker.args[0], marker.args[1], status, details)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, title, status, details in sorted(_RESULTS.values(), key=lambda r: r[0]):
        line = f"[{number}] {title}: {status}"
        if details:
            line += f"  ({details})"
        terminalreporter.write_line(line)
