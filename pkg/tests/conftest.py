import pytest

from helpers import REFERENCE_MODEL, arch_2x2, running_example

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    number, title = marker.args
    previous = _criteria.get(number, (title, True))[1]
    _criteria[number] = (title, previous and not report.failed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture
def example_graph():
    return running_example()


@pytest.fixture
def spec2x2():
    return arch_2x2()


@pytest.fixture
def reference_model():
    return dict(REFERENCE_MODEL)
