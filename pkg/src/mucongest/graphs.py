"""Simple undirected graphs, the generator families used in experiments, and
the edge-list text format."""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .errors import InvalidSpec

GNP_RETRIES = 16


class Graph:
    """An immutable simple undirected graph on nodes ``0..n-1``.

    Edges are stored as sorted pairs ``(u, v)`` with ``u < v``; adjacency
    lists are sorted so that every traversal is deterministic.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise InvalidSpec("node count must be non-negative")
        self.n = n
        adj: list[set[int]] = [set() for _ in range(n)]
        canon = []
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise InvalidSpec(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidSpec(f"edge ({u}, {v}) outside 0..{n - 1}")
            if v in adj[u]:
                raise InvalidSpec(f"duplicate edge ({u}, {v})")
            adj[u].add(v)
            adj[v].add(u)
            canon.append((min(u, v), max(u, v)))
        self.edges: list[tuple[int, int]] = sorted(canon)
        self.adj: list[list[int]] = [sorted(a) for a in adj]
        self._adjset = [frozenset(a) for a in adj]

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adj), default=0)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adjset[u]

    def neighbors(self, v: int) -> list[int]:
        return self.adj[v]

    def distances_from(self, src: int) -> list[int]:
        dist = [-1] * self.n
        dist[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for w in self.adj[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        return min(self.distances_from(0)) >= 0

    def diameter(self) -> int:
        if self.n <= 1:
            return 0
        return max(max(self.distances_from(v)) for v in range(self.n))

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, tuple(self.edges)))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def complete_graph(n: int) -> Graph:
    return Graph(n, itertools.combinations(range(n), 2))


def star_graph(n: int) -> Graph:
    """Star on ``n`` nodes: center 0 joined to leaves ``1..n-1``."""
    return Graph(n, ((0, v) for v in range(1, n)))


def path_graph(n: int) -> Graph:
    return Graph(n, ((v, v + 1) for v in range(n - 1)))


def cycle_of_cliques(n: int, delta: int) -> Graph:
    """``n/(delta-1)`` cliques of ``delta-1`` nodes whose first nodes form a cycle.

    Node ``v_{i,j}`` gets id ``i*(delta-1) + j``.  At least three cliques are
    required so that each clique meets the rest through exactly two edges.
    """
    if delta < 3:
        raise InvalidSpec("cycle_of_cliques needs delta >= 3")
    width = delta - 1
    if n <= 0 or n % width:
        raise InvalidSpec(f"cycle_of_cliques needs (delta-1)={width} to divide n={n}")
    count = n // width
    if count < 3:
        raise InvalidSpec(f"cycle_of_cliques needs at least 3 cliques, got {count}")
    edges = set()
    for i in range(count):
        base = i * width
        for j, k in itertools.combinations(range(width), 2):
            edges.add((base + j, base + k))
        a, b = base, ((i + 1) % count) * width
        edges.add((min(a, b), max(a, b)))
    return Graph(n, edges)


def gnp_graph(n: int, p: float, seed: int) -> Graph:
    rng = random.Random(f"gnp/{n}/{p}/{seed}")
    edges = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]
    return Graph(n, edges)


@dataclass(frozen=True)
class GraphSpec:
    kind: str
    n: int = 0
    p: float = 0.5
    delta: int = 0
    path: Optional[str] = None
    seed: int = 0

    KINDS = ("gnp", "clique", "star", "path", "cycle_of_cliques", "file")

    def validate(self) -> None:
        if self.kind not in self.KINDS:
            raise InvalidSpec(f"unknown graph kind {self.kind!r}")
        if self.kind == "file":
            if not self.path:
                raise InvalidSpec("file graphs need a path")
            return
        if self.n < 1:
            raise InvalidSpec("n must be positive")
        if self.kind == "gnp" and not 0.0 <= self.p <= 1.0:
            raise InvalidSpec("p must lie in [0, 1]")
        if self.kind == "cycle_of_cliques":
            if self.delta < 3:
                raise InvalidSpec("cycle_of_cliques needs delta >= 3")
            if self.n % (self.delta - 1):
                raise InvalidSpec(
                    f"cycle_of_cliques needs (delta-1)={self.delta - 1} to divide n={self.n}"
                )
            if self.n // (self.delta - 1) < 3:
                raise InvalidSpec("cycle_of_cliques needs at least 3 cliques")

    @classmethod
    def from_dict(cls, d: dict) -> "GraphSpec":
        known = {k: d[k] for k in ("kind", "n", "p", "delta", "path", "seed") if k in d}
        return cls(**known)


@dataclass(frozen=True)
class Generated:
    graph: Graph
    effective_seed: int


def generate_with_seed(spec: GraphSpec) -> Generated:
    """Build the graph for ``spec`` and report the seed actually used.

    G(n, p) draws are retried with ``seed+1, seed+2, ...`` until connected.
    """
    spec.validate()
    if spec.kind == "gnp":
        for attempt in range(GNP_RETRIES + 1):
            g = gnp_graph(spec.n, spec.p, spec.seed + attempt)
            if g.is_connected():
                return Generated(g, spec.seed + attempt)
        return Generated(g, spec.seed + GNP_RETRIES)
    if spec.kind == "clique":
        return Generated(complete_graph(spec.n), spec.seed)
    if spec.kind == "star":
        return Generated(star_graph(spec.n), spec.seed)
    if spec.kind == "path":
        return Generated(path_graph(spec.n), spec.seed)
    if spec.kind == "cycle_of_cliques":
        return Generated(cycle_of_cliques(spec.n, spec.delta), spec.seed)
    return Generated(read_edge_list(spec.path), spec.seed)


def generate(spec: GraphSpec) -> Graph:
    return generate_with_seed(spec).graph


def read_edge_list(path, n: Optional[int] = None) -> Graph:
    """Parse ``u v`` lines (0-based ids, ``#`` comments allowed).

    The node count is ``max id + 1`` unless ``n`` is given.
    """
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidSpec(f"{path}:{lineno}: expected 'u v', got {raw!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise InvalidSpec(f"{path}:{lineno}: non-integer node id") from None
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return Graph(n, edges)


def write_edge_list(graph: Graph, path) -> None:
    Path(path).write_text("".join(f"{u} {v}\n" for u, v in graph.edges))


export = write_edge_list
