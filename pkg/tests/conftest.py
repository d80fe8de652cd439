import numpy as np
import pytest
from hypothesis import settings, strategies as st

from qfflab.graph import Graph

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@st.composite
def small_graphs(draw, min_nodes=1, max_nodes=8):
    """Arbitrary simple graphs, possibly disconnected, with d = max degree (at least 1)."""
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = [p for p, keep in zip(pairs, mask) if keep]
    slack = draw(st.integers(0, 2))
    g = Graph.from_edges(n, edges)
    return Graph.from_edges(n, edges, d=g.d + slack)


def random_graph(rng: np.random.Generator, n: int, p: float = 0.4) -> Graph:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Graph.from_edges(n, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance bookkeeping: one line per check as it runs, one line per criterion at the end
_CRITERIA: dict[int, list[tuple[str, bool]]] = {}


@pytest.fixture
def criterion(capsys):
    def record(number: int, ok: bool, detail: str, part: str = "") -> bool:
        label = f"{number}" + (f" [{part}]" if part else "")
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {label}: {detail}")
        _CRITERIA.setdefault(number, []).append((part, bool(ok)))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        checks = _CRITERIA[number]
        failed = [p or "main" for p, ok in checks if not ok]
        status = "FAIL" if failed else "PASS"
        extra = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"{status} criterion {number}: {len(checks)} check(s){extra}")
