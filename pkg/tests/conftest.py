import random
import sys
import time
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from rrgraph.corpus import named_graphs, random_strongly_connected, small_graphs  # noqa: E402
from rrgraph.graph import is_strongly_connected  # noqa: E402

_CRITERIA: dict[int, dict] = {}

# the oracles are brute force, so per-example time varies widely
settings.register_profile("rrgraph", deadline=None, max_examples=60)
settings.load_profile("rrgraph")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.addinivalue_line("markers", "acceptance: acceptance suite")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, title = marker.args
    entry = _CRITERIA.setdefault(num, {"title": title, "passed": True, "detail": "", "seconds": 0.0})
    if rep.when in ("setup", "call"):
        entry["seconds"] += rep.duration
    if rep.failed:
        entry["passed"] = False
        if call.excinfo is not None:
            entry["detail"] = str(call.excinfo.value).splitlines()[0][:160] if str(call.excinfo.value) else call.excinfo.typename


@pytest.fixture
def criterion(request):
    """Lets an acceptance test attach a one-line summary to its criterion."""
    marker = request.node.get_closest_marker("criterion")
    num, title = marker.args
    entry = _CRITERIA.setdefault(num, {"title": title, "passed": True, "detail": "", "seconds": 0.0})

    def note(text: str) -> None:
        entry["detail"] = text

    return note


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        status = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {num:2d}: {e['title']} ({e['seconds']:.1f}s) {e['detail']}")


class Timer:
    def __init__(self):
        self.start = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start


@pytest.fixture(scope="session")
def desk_corpus():
    """Named graphs, every sink-free graph on at most 3 states (out-degree
    at most 3), and seeded random strongly connected graphs on 4 to 8 states."""
    graphs = list(named_graphs().items())
    for k, G in enumerate(small_graphs(3, max_out=3)):
        graphs.append((f"small{k}", G))
    rng = random.Random(20240601)
    for n in range(4, 9):
        for k in range(12):
            G = random_strongly_connected(rng, n, max_out=3)
            graphs.append((f"rand{n}_{k}", G))
    return graphs


@pytest.fixture(scope="session")
def strongly_connected_desk(desk_corpus):
    return [(name, G) for name, G in desk_corpus if is_strongly_connected(G)]
