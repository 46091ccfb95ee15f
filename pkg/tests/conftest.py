import pytest

_ACCEPTANCE_LINES: list[tuple[int, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.fixture
def criterion(request):
    """Record a measured detail string for the current acceptance test."""
    details: list[str] = []
    request.node.user_properties.append(("details", details))
    return details.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    details = dict(item.user_properties).get("details", [])
    status = "PASS" if report.passed else "FAIL"
    line = f"[{status}] criterion {number:>2}: {title}"
    if details:
        line += " | " + "; ".join(details)
    _ACCEPTANCE_LINES.append((number, line))
    print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
