import time

import pytest

from lexnet.graph import UndirectedGraph

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        number, title = marker.args
        _ACCEPTANCE.append((number, title, rep.outcome, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome, duration in sorted(_ACCEPTANCE):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} ({duration:.1f}s)")


def graph(n, edges, words=None):
    words = words or [str(i) for i in range(n)]
    u = [a for a, _ in edges]
    v = [b for _, b in edges]
    return UndirectedGraph.from_edges(words, u, v)


@pytest.fixture
def triangle():
    return graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def star():
    return graph(4, [(0, 1), (0, 2), (0, 3)])


@pytest.fixture
def path3():
    return graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def timer():
    class Timer:
        def __enter__(self):
            self.start = time.perf_counter()
            return self

        def __exit__(self, *exc):
            self.elapsed = time.perf_counter() - self.start

    return Timer
