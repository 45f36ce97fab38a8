import pytest

from semvad.segmenter import BACKENDS

_acceptance_results = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    crit = marker.args[0]
    ok = call.excinfo is None
    detail = dict(item.user_properties).get("detail", "")
    prev = _acceptance_results.get(crit, (True, ""))
    _acceptance_results[crit] = (prev[0] and ok, "; ".join(x for x in (prev[1], detail) if x))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_acceptance_results):
        ok, detail = _acceptance_results[crit]
        terminalreporter.write_line(f"{crit} {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return request.param

