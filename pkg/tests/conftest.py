import numpy as np
import pytest

from pushpull.graph import DirectedGraph, random_strongly_connected, star
from pushpull.mixing import MixingPair

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def star_pair():
    g_R, g_C = star()
    return MixingPair.from_graphs(g_R, g_C)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_digraph(rng, n, p_edge):
    edges = {(a, b) for a in range(n) for b in range(n) if a != b and rng.random() < p_edge}
    return DirectedGraph(n, frozenset(edges))


def rooted_graph(rng, n, roots, p_extra=0.3):
    """Digraph whose root set is exactly ``roots``.

    ``roots`` form a directed cycle, every other vertex hangs off an earlier
    vertex, and extra random edges never enter ``roots`` from outside.
    """
    roots = sorted(roots)
    edges = set()
    if len(roots) > 1:
        edges |= {(roots[i], roots[(i + 1) % len(roots)]) for i in range(len(roots))}
    order = roots + [v for v in rng.permutation(n).tolist() if v not in roots]
    for i in range(len(roots), n):
        parent = order[int(rng.integers(0, i))]
        edges.add((parent, order[i]))
    for a in range(n):
        for b in range(n):
            if a != b and rng.random() < p_extra and not (b in roots and a not in roots):
                edges.add((a, b))
    return DirectedGraph(n, frozenset(edges))


def strongly_connected_pair(seed, n_range=(3, 9)):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(*n_range))
    m_R = int(rng.integers(n, n * (n - 1) + 1))
    m_C = int(rng.integers(n, n * (n - 1) + 1))
    g_R = random_strongly_connected(n, m_R, seed)
    g_C = g_R if seed % 2 == 0 else random_strongly_connected(n, m_C, seed + 1000)
    return MixingPair.from_graphs(g_R, g_C)
