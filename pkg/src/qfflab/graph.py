"""Bounded-degree graphs with query access, brute-force cut quantities and fixtures.

Nodes are dense 0-based integers ``0..n-1``. Neighbor lists are sorted ascending,
so the ``i``-th neighbor query is deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

BRUTE_FORCE_MAX_NODES = 24


class GraphFormatError(ValueError):
    """Raised for malformed graph documents or invalid graph data."""


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    d: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise GraphFormatError("graph needs at least one node")
        if len(self.adjacency) != self.n:
            raise GraphFormatError("adjacency must have one entry per node")
        for v, nbrs in enumerate(self.adjacency):
            if list(nbrs) != sorted(set(nbrs)):
                raise GraphFormatError(f"neighbor list of {v} not sorted/unique")
            if len(nbrs) > self.d:
                raise GraphFormatError(f"node {v} has degree {len(nbrs)} > d={self.d}")
            for u in nbrs:
                if not 0 <= u < self.n:
                    raise GraphFormatError(f"node index {u} out of range")
                if u == v:
                    raise GraphFormatError(f"self-loop at {v}")
                if v not in self.adjacency[u]:
                    raise GraphFormatError(f"edge ({v},{u}) missing its reverse")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], d: int | None = None) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u},{v}) has node index >= N={n}")
            if u == v:
                raise GraphFormatError(f"self-loop at {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        max_deg = max((len(s) for s in nbrs), default=0)
        if d is None:
            d = max(max_deg, 1)
        if max_deg > d:
            raise GraphFormatError(f"degree bound exceeded: max degree {max_deg} > d={d}")
        return cls(n, d, tuple(tuple(sorted(s)) for s in nbrs))

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nb in enumerate(self.adjacency) for v in nb if u < v]

    def num_edges(self) -> int:
        return sum(len(nb) for nb in self.adjacency) // 2

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with node ``v`` renamed to ``perm[v]``."""
        return Graph.from_edges(self.n, [(perm[u], perm[v]) for u, v in self.edges()], d=self.d)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges())
        return g

    def to_json(self) -> dict:
        return {"n": self.n, "d": self.d, "edges": [list(e) for e in self.edges()]}

    def neighbor_masks(self) -> np.ndarray:
        masks = np.zeros(self.n, dtype=np.int64)
        for v, nb in enumerate(self.adjacency):
            for u in nb:
                masks[v] |= 1 << u
        return masks


def validate_graph(g: Graph) -> bool:
    """Re-audit simplicity, symmetry, sortedness and the degree bound."""
    Graph(g.n, g.d, g.adjacency)
    return True


# --------------------------------------------------------------------------- I/O


def load_graph(text: str) -> Graph:
    """Parse the edge-list format: header ``N d`` then one ``u v`` per line."""
    header = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected two integers, got {raw!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer token in {raw!r}") from None
        if header is None:
            if a < 1 or b < 0:
                raise GraphFormatError(f"line {lineno}: bad header {raw!r}")
            header = (a, b)
            continue
        if a == b:
            raise GraphFormatError(f"line {lineno}: self-loop at {a}")
        if not (0 <= a < header[0] and 0 <= b < header[0]):
            raise GraphFormatError(f"line {lineno}: node index >= N={header[0]}")
        edges.append((a, b))
    if header is None:
        raise GraphFormatError("missing 'N d' header line")
    return Graph.from_edges(header[0], edges, d=header[1])


def load_graph_json(doc: str | dict) -> Graph:
    data = json.loads(doc) if isinstance(doc, str) else doc
    try:
        return Graph.from_edges(int(data["n"]), data.get("edges", []), d=int(data["d"]))
    except KeyError as exc:
        raise GraphFormatError(f"missing key {exc}") from None


def dump_graph(g: Graph) -> str:
    lines = [f"{g.n} {g.d}"] + [f"{u} {v}" for u, v in g.edges()]
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- query access


@dataclass
class QueryCounter:
    neighbor_queries: int = 0
    node_samples: int = 0


ABSENT = None  # marker returned when v has fewer than i neighbors


def neighbor_query(g: Graph, v: int, i: int, counter: QueryCounter | None = None):
    """Return the ``i``-th neighbor (1-based, 1 <= i <= d) of ``v`` or ``ABSENT``."""
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range [0, {g.n})")
    if not 1 <= i <= g.d:
        raise IndexError(f"neighbor index {i} out of range [1, {g.d}]")
    if counter is not None:
        counter.neighbor_queries += 1
    nb = g.adjacency[v]
    return nb[i - 1] if i <= len(nb) else ABSENT


def random_node(g: Graph, rng: np.random.Generator, counter: QueryCounter | None = None) -> int:
    if counter is not None:
        counter.node_samples += 1
    return int(rng.integers(g.n))


@dataclass
class QueryAccess:
    """A graph behind the query model, counting every access."""

    graph: Graph
    counter: QueryCounter = field(default_factory=QueryCounter)

    def neighbor(self, v: int, i: int):
        return neighbor_query(self.graph, v, i, self.counter)

    def random_node(self, rng: np.random.Generator) -> int:
        return random_node(self.graph, rng, self.counter)


# --------------------------------------------------------------- cut quantities


def _check_brute_force(n: int):
    if n > BRUTE_FORCE_MAX_NODES:
        raise ValueError(f"brute force capped at N <= {BRUTE_FORCE_MAX_NODES}, got {n}")


def _subset_tables(masks: np.ndarray):
    """For every subset S (as a bitmask): neighbor-union, internal edge count, size."""
    n = len(masks)
    size = 1 << n
    union = np.zeros(size, dtype=np.int64)
    internal = np.zeros(size, dtype=np.int64)
    for k in range(n):
        lo = slice(0, 1 << k)
        hi = slice(1 << k, 1 << (k + 1))
        union[hi] = union[lo] | masks[k]
        subsets = np.arange(1 << k, dtype=np.int64)
        internal[hi] = internal[lo] + np.bitwise_count(subsets & masks[k])
    card = np.bitwise_count(np.arange(size, dtype=np.int64))
    return union, internal, card


def vertex_expansion(g: Graph) -> Fraction:
    """min over nonempty |S| <= N/2 of |outer boundary of S| / |S|."""
    _check_brute_force(g.n)
    if g.n < 2:
        raise ValueError("expansion needs at least two nodes")
    union, _, card = _subset_tables(g.neighbor_masks())
    subsets = np.arange(1 << g.n, dtype=np.int64)
    ok = (card >= 1) & (2 * card <= g.n)
    boundary = np.bitwise_count(union & ~subsets)
    sel_b, sel_c = boundary[ok], card[ok]
    # exact argmin of b/c via cross-multiplication over a float pre-filter
    ratios = sel_b / sel_c
    best = ratios.min()
    cand = np.flatnonzero(ratios <= best + 1e-12)
    return min(Fraction(int(sel_b[i]), int(sel_c[i])) for i in cand)


def _cut_size(g: Graph, S: set[int]) -> int:
    return sum(1 for v in S for u in g.adjacency[v] if u not in S)


def conductance_set(g: Graph, S: Iterable[int]) -> Fraction:
    """|E(S, S^c)| / (d |S|)."""
    S = set(int(v) for v in S)
    if not S:
        raise ValueError("conductance of the empty set is undefined")
    if 2 * len(S) > g.n:
        raise ValueError("conductance_set requires |S| <= |V|/2")
    return Fraction(_cut_size(g, S), g.d * len(S))


def _min_conductance(masks: np.ndarray, n: int, d: int) -> Fraction:
    _check_brute_force(n)
    if n < 2:
        raise ValueError("conductance needs at least two nodes")
    _, internal, card = _subset_tables(masks)
    deg = np.bitwise_count(masks)
    degsum = np.zeros(1 << n, dtype=np.int64)
    for k in range(n):
        degsum[1 << k: 1 << (k + 1)] = degsum[: 1 << k] + deg[k]
    cut = degsum - 2 * internal
    ok = (card >= 1) & (2 * card <= n)
    c, s = cut[ok], card[ok]
    ratios = c / s
    cand = np.flatnonzero(ratios <= ratios.min() + 1e-12)
    return min(Fraction(int(c[i]), int(d * s[i])) for i in cand)


def conductance_graph(g: Graph) -> Fraction:
    """Phi(G): min over |T| <= |V|/2 of |E(T, V minus T)| / (d |T|)."""
    return _min_conductance(g.neighbor_masks(), g.n, g.d)


def induced_conductance(g: Graph, S: Iterable[int]) -> Fraction:
    """Phi(G[S]) on the induced subgraph, normalized by the ambient degree bound."""
    nodes = sorted(set(int(v) for v in S))
    if not nodes:
        raise ValueError("induced conductance of the empty set is undefined")
    index = {v: k for k, v in enumerate(nodes)}
    masks = np.zeros(len(nodes), dtype=np.int64)
    for v in nodes:
        for u in g.adjacency[v]:
            if u in index:
                masks[index[v]] |= 1 << index[u]
    return _min_conductance(masks, len(nodes), g.d)


# --------------------------------------------------------------------- fixtures


def gen_cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("a simple cycle needs n >= 3")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)], d=2)


def gen_path(n: int) -> Graph:
    if n < 1:
        raise ValueError("path needs n >= 1")
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)], d=max(1, min(2, n - 1)))


def gen_complete(n: int) -> Graph:
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)], d=n - 1)


def gen_empty(n: int, d: int = 1) -> Graph:
    return Graph(n, d, tuple(() for _ in range(n)))


def gen_random_regular(n: int, d: int, seed: int) -> Graph:
    """Uniform random d-regular simple graph (networkx pairing model), fixed by ``seed``."""
    if d < 0 or d >= n or (n * d) % 2:
        raise ValueError(f"no simple {d}-regular graph on {n} nodes")
    g = nx.random_regular_graph(d, n, seed=int(seed))
    return Graph.from_edges(n, g.edges(), d=max(d, 1))


def gen_dumbbell(n_half: int, d: int, bridges: int, seed: int) -> Graph:
    """Two independent random d-regular halves joined by ``bridges`` disjoint edges.

    Bridge k joins node k of the first half to node ``n_half + k``; the stored degree
    bound is d + 1.
    """
    if bridges < 1 or bridges > n_half:
        raise ValueError("need 1 <= bridges <= n_half")
    ss = np.random.SeedSequence(int(seed)).spawn(2)
    left = gen_random_regular(n_half, d, int(ss[0].generate_state(1)[0]))
    right = gen_random_regular(n_half, d, int(ss[1].generate_state(1)[0]))
    edges = left.edges() + [(u + n_half, v + n_half) for u, v in right.edges()]
    edges += [(k, n_half + k) for k in range(bridges)]
    return Graph.from_edges(2 * n_half, edges, d=d + 1)


def parse_graph_spec(spec: str, seed: int = 0) -> Graph:
    """Build a fixture from ``name:args`` such as ``cycle:32`` or ``dumbbell:16,3,1``.

    Generator seeds default to ``seed``; a trailing ``@s`` overrides it
    (``regular:32,6@4``).
    """
    name, _, rest = spec.partition(":")
    if "@" in rest:
        rest, _, s = rest.partition("@")
        seed = int(s)
    try:
        args = [int(a) for a in rest.split(",") if a.strip()]
    except ValueError:
        raise GraphFormatError(f"bad generator arguments in {spec!r}") from None
    try:
        if name == "cycle":
            (n,) = args
            return gen_cycle(n)
        if name == "path":
            (n,) = args
            return gen_path(n)
        if name == "complete":
            (n,) = args
            return gen_complete(n)
        if name == "empty":
            return gen_empty(*args)
        if name == "regular":
            n, d = args
            return gen_random_regular(n, d, seed)
        if name == "dumbbell":
            if len(args) == 1:
                args = args + [3, 1]
            n_half, d, bridges = args
            return gen_dumbbell(n_half, d, bridges, seed)
    except (TypeError, ValueError) as exc:
        raise GraphFormatError(f"invalid generator spec {spec!r}: {exc}") from None
    raise GraphFormatError(f"unknown generator {name!r}")
