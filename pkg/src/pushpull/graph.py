"""Directed graphs, reachability, root sets and topology generators.

Vertices are ``0..n-1``. An edge ``(j, i)`` means agent ``j`` sends to
agent ``i``; for a mixing matrix ``M`` this is the pattern ``M[i, j] > 0``.
Self-loops are never stored; the matrix builders add the diagonal.

All randomness goes through :func:`numpy.random.default_rng` (PCG64) seeded
explicitly, so every generator is a pure function of its arguments.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import InfeasibleEdgeCount, NotARoot

Edge = tuple[int, int]


@dataclass(frozen=True)
class DirectedGraph:
    """Immutable digraph on ``n`` vertices.

    Attributes:
        n: number of vertices.
        edges: ordered pairs ``(src, dst)``, no self-loops, no duplicates.
    """

    n: int
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"graph needs at least one vertex, got n={self.n}")
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        for a, b in edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a}, {b}) out of range for n={self.n}")
            if a == b:
                raise ValueError(f"self-loop ({a}, {a}) must not be stored")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> "DirectedGraph":
        edges = list(edges)
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edges")
        return cls(n, frozenset(edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def out_neighbors(self) -> list[list[int]]:
        out = [[] for _ in range(self.n)]
        for a, b in self.sorted_edges():
            out[a].append(b)
        return out

    def in_neighbors(self) -> list[list[int]]:
        inn = [[] for _ in range(self.n)]
        for a, b in self.sorted_edges():
            inn[b].append(a)
        return inn

    def in_degree(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for _, b in self.edges:
            deg[b] += 1
        return deg

    def out_degree(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for a, _ in self.edges:
            deg[a] += 1
        return deg

    def subgraph(self, vertices: Iterable[int]) -> "DirectedGraph":
        """Induced subgraph, relabelled to ``0..len(vertices)-1`` in sorted order."""
        keep = sorted(set(vertices))
        index = {v: i for i, v in enumerate(keep)}
        return DirectedGraph(
            len(keep),
            frozenset((index[a], index[b]) for a, b in self.edges if a in index and b in index),
        )


def reachable_from(g: DirectedGraph, source: int) -> set[int]:
    seen = {source}
    queue = deque([source])
    out = g.out_neighbors()
    while queue:
        a = queue.popleft()
        for b in out[a]:
            if b not in seen:
                seen.add(b)
                queue.append(b)
    return seen


def is_strongly_connected(g: DirectedGraph) -> bool:
    # strongly connected iff 0 reaches everything in g and in reverse(g)
    return len(reachable_from(g, 0)) == g.n and len(reachable_from(reverse(g), 0)) == g.n


def root_set(g: DirectedGraph) -> frozenset[int]:
    """Vertices from which every vertex is reachable (roots of spanning trees)."""
    return frozenset(r for r in range(g.n) if len(reachable_from(g, r)) == g.n)


def reverse(g: DirectedGraph) -> DirectedGraph:
    return DirectedGraph(g.n, frozenset((b, a) for a, b in g.edges))


def strongly_connected_components(g: DirectedGraph) -> list[list[int]]:
    """Tarjan's algorithm, iterative. Components come out in reverse topological order."""
    out = g.out_neighbors()
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0

    for start in range(g.n):
        if start in index:
            continue
        work = [(start, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            recurse = False
            for j in range(i, len(out[v])):
                w = out[v][j]
                if w not in index:
                    work.append((v, j + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def condensation_sources(g: DirectedGraph) -> list[list[int]]:
    """Strongly connected components with no incoming edge from another component."""
    comps = strongly_connected_components(g)
    label = {}
    for c, comp in enumerate(comps):
        for v in comp:
            label[v] = c
    has_incoming = [False] * len(comps)
    for a, b in g.edges:
        if label[a] != label[b]:
            has_incoming[label[b]] = True
    return [comp for c, comp in enumerate(comps) if not has_incoming[c]]


def random_strongly_connected(n: int, m: int, seed: int) -> DirectedGraph:
    """Random strongly connected digraph with exactly ``m`` edges.

    A random Hamiltonian cycle guarantees strong connectivity; the remaining
    ``m - n`` edges are drawn uniformly without replacement from the
    non-cycle pairs.
    """
    if n == 1 and m == 0:
        return DirectedGraph(1)
    if m < n or m > n * (n - 1):
        raise InfeasibleEdgeCount(f"need n <= m <= n(n-1) for n={n}, got m={m}")
    rng = np.random.default_rng(seed)
    order = [int(v) for v in rng.permutation(n)]
    cycle = {(order[i], order[(i + 1) % n]) for i in range(n)}
    candidates = [(a, b) for a in range(n) for b in range(n) if a != b and (a, b) not in cycle]
    picks = rng.choice(len(candidates), size=m - n, replace=False) if m > n else []
    extra = {candidates[int(i)] for i in picks}
    return DirectedGraph(n, frozenset(cycle | extra))


def spanning_tree_from_root(g: DirectedGraph, root: int) -> DirectedGraph:
    """BFS spanning tree out of ``root``; neighbours visited lowest index first."""
    if root not in root_set(g):
        raise NotARoot(f"vertex {root} does not reach every vertex")
    out = g.out_neighbors()
    seen = {root}
    queue = deque([root])
    tree = set()
    while queue:
        a = queue.popleft()
        for b in out[a]:
            if b not in seen:
                seen.add(b)
                tree.add((a, b))
                queue.append(b)
    return DirectedGraph(g.n, frozenset(tree))


def star(n: int = 4, center: int = 0) -> tuple[DirectedGraph, DirectedGraph]:
    """Star with the centre pushing decisions out and pulling gradients in.

    Returns ``(g_R, g_C)``: centre -> leaves for the row-stochastic side,
    leaves -> centre for the column-stochastic side.
    """
    leaves = [i for i in range(n) if i != center]
    g_r = DirectedGraph(n, frozenset((center, i) for i in leaves))
    g_c = DirectedGraph(n, frozenset((i, center) for i in leaves))
    return g_r, g_c


def choose_leaders(n: int, count: int, seed: int) -> frozenset[int]:
    rng = np.random.default_rng(seed)
    return frozenset(int(v) for v in rng.choice(n, size=count, replace=False))


def add_leader_subnet(g: DirectedGraph, leaders: Iterable[int], seed: int) -> DirectedGraph:
    """Add links among ``leaders`` until they induce a strongly connected subgraph.

    Links follow a random directed cycle through the leaders; existing edges
    are kept, so nothing is added when the leaders are already strongly connected.
    """
    leaders = sorted(set(leaders))
    if len(leaders) <= 1 or is_strongly_connected(g.subgraph(leaders)):
        return g
    rng = np.random.default_rng(seed)
    order = [leaders[int(i)] for i in rng.permutation(len(leaders))]
    cycle = {(order[i], order[(i + 1) % len(order)]) for i in range(len(order))}
    return DirectedGraph(g.n, g.edges | frozenset(cycle))


@dataclass(frozen=True)
class GraphSequence:
    """Time-varying topology: random link activation over a base graph.

    With a nonempty ``leader_set``, links from followers into leaders are
    dropped from the decision (row-stochastic) graph and links from leaders
    to followers are dropped from the tracking (column-stochastic) graph.
    """

    base: DirectedGraph
    activation_probability: float = 1.0
    leader_set: frozenset[int] = frozenset()
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.activation_probability <= 1.0:
            raise ValueError("activation_probability must lie in (0, 1]")
        leaders = frozenset(int(v) for v in self.leader_set)
        object.__setattr__(self, "leader_set", leaders)
        if any(not 0 <= v < self.base.n for v in leaders):
            raise ValueError("leader outside the vertex range")
        if leaders and not is_strongly_connected(self.base.subgraph(leaders)):
            raise ValueError("leader subnet must be strongly connected")


def masked_graphs(seq: GraphSequence, k: int) -> tuple[DirectedGraph, DirectedGraph]:
    """Topologies ``(g_R_k, g_C_k)`` active at iteration ``k``."""
    edges = seq.base.sorted_edges()
    if seq.activation_probability < 1.0:
        rng = np.random.default_rng([seq.seed, k])
        keep = rng.random(len(edges)) < seq.activation_probability
        edges = [e for e, on in zip(edges, keep) if on]
    leaders = seq.leader_set
    if not leaders:
        g = DirectedGraph(seq.base.n, frozenset(edges))
        return g, g
    r_edges = [(a, b) for a, b in edges if not (a not in leaders and b in leaders)]
    c_edges = [(a, b) for a, b in edges if not (a in leaders and b not in leaders)]
    return DirectedGraph(seq.base.n, frozenset(r_edges)), DirectedGraph(seq.base.n, frozenset(c_edges))


def write_edge_list(g: DirectedGraph, path: str | Path) -> None:
    lines = [f"{g.n} {g.m}"] + [f"{a} {b}" for a, b in g.sorted_edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path: str | Path) -> DirectedGraph:
    """Parse the ``n m`` header followed by ``m`` lines of ``src dst``."""
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise ValueError(f"{path}: expected header 'n m'")
    n, m = (int(t) for t in rows[0])
    body = rows[1:]
    if len(body) != m:
        raise ValueError(f"{path}: header announces {m} edges, found {len(body)}")
    edges = []
    for row in body:
        if len(row) != 2:
            raise ValueError(f"{path}: malformed edge line {' '.join(row)!r}")
        edges.append((int(row[0]), int(row[1])))
    return DirectedGraph.from_edges(n, edges)
