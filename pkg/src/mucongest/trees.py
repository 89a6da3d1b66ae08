"""Spanning-tree building blocks run on the round engine: BFS tree
construction, pipelined convergecast of aggregates, pipelined broadcast, and
relabeling by degree class.

A node's place in a tree (parent, depth, height) packs into one word; which
neighbors are its children is a flag per adjacency entry and so costs no
extra words, like the adjacency list itself.
"""

from __future__ import annotations

import math
import operator
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .engine import Network, NodeContext, NodeProgram
from .errors import MemoryExceeded
from .graphs import Graph

JOIN, CHILD, HEIGHT = 1, 2, 3
TREE_WORDS = 1


@dataclass
class Tree:
    root: int
    parent: list  # parent[root] is None
    children: list
    depth: list
    height: list

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def max_depth(self) -> int:
        return max(self.depth)

    def preorder(self) -> list:
        order, stack = [], [self.root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.children[v]))
        return order

    def subtree(self, v: int) -> list:
        out, stack = [], [v]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(reversed(self.children[u]))
        return out

    def path_up(self, v: int, ancestor: int) -> list:
        path = [v]
        while path[-1] != ancestor:
            path.append(self.parent[path[-1]])
        return path

    @classmethod
    def from_states(cls, root: int, states: Sequence[dict]) -> "Tree":
        return cls(
            root,
            [s["parent"] for s in states],
            [list(s["children"]) for s in states],
            [s["depth"] for s in states],
            [s["height"] for s in states],
        )


def bfs_tree(graph: Graph, root: int) -> Tree:
    """Centralized BFS tree with the same tie-breaking as :class:`TreeBuilder`."""
    n = graph.n
    depth = [-1] * n
    parent: list = [None] * n
    depth[root] = 0
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in graph.adj[u]:
            if depth[w] < 0:
                depth[w] = depth[u] + 1
                parent[w] = u
                queue.append(w)
            elif depth[w] == depth[u] + 1 and u < parent[w]:
                parent[w] = u
    children = [[] for _ in range(n)]
    for v in range(n):
        if parent[v] is not None:
            children[parent[v]].append(v)
    for c in children:
        c.sort()
    height = [0] * n
    for v in sorted(range(n), key=lambda x: -depth[x]):
        if parent[v] is not None:
            height[parent[v]] = max(height[parent[v]], height[v] + 1)
    return Tree(root, parent, children, depth, height)


def binary_tree(n: int) -> Tree:
    """Heap-shaped tree on ids ``0..n-1`` (children of v are 2v+1, 2v+2).

    Only meaningful when every pair can talk, as in the all-to-all model.
    """
    parent = [None] + [(v - 1) // 2 for v in range(1, n)]
    children = [[c for c in (2 * v + 1, 2 * v + 2) if c < n] for v in range(n)]
    depth = [0] * n
    for v in range(1, n):
        depth[v] = depth[parent[v]] + 1
    height = [0] * n
    for v in range(n - 1, 0, -1):
        height[parent[v]] = max(height[parent[v]], height[v] + 1)
    return Tree(0, parent, children, depth, height)


class TreeBuilder(NodeProgram):
    """Flooding BFS from ``root`` followed by a convergecast of subtree heights.

    A node adopts the lowest-id neighbor among those whose JOIN reached it
    first.  One round after adopting it acknowledges its parent with CHILD and
    forwards JOIN to everyone else, so its child set is final two rounds after
    it joined.  Heights then flow up as soon as all children have reported.
    """

    def __init__(self, root: int):
        self.root = root

    def init(self, ctx: NodeContext):
        st = {
            "parent": None,
            "depth": None,
            "joined": None,
            "children": [],
            "height": None,
            "pending": None,
            "best": 0,
            "sent_height": False,
        }
        if ctx.node == self.root:
            st["depth"] = 0
            st["joined"] = 0
            if not ctx.neighbors:
                st["height"] = 0
                st["pending"] = 0
                st["sent_height"] = True
        return st

    def _children_final(self, ctx, st) -> bool:
        return st["joined"] is not None and ctx.round >= st["joined"] + 2

    def send(self, ctx, st):
        out = {}
        if st["joined"] is not None and ctx.round == st["joined"] + 1:
            for w in ctx.neighbors:
                out[w] = CHILD if w == st["parent"] else JOIN
        elif st["height"] is not None and not st["sent_height"]:
            out[st["parent"]] = (HEIGHT, st["height"])
            st["sent_height"] = True
        return st, out

    def receive(self, ctx, st, inbox):
        joins = []
        for src, msg in inbox:
            if msg == JOIN:
                joins.append(src)
            elif msg == CHILD:
                st["children"].append(src)
            else:
                st["best"] = max(st["best"], msg[1] + 1)
                st["pending"] -= 1
        if st["joined"] is None and joins:
            st["parent"] = min(joins)
            st["joined"] = ctx.round
            st["depth"] = ctx.round
        if st["pending"] is None and self._children_final(ctx, st):
            st["children"].sort()
            st["pending"] = len(st["children"])
        if st["pending"] == 0 and st["height"] is None:
            st["height"] = st["best"]
            if st["parent"] is None:
                st["sent_height"] = True
        return st, ()

    def size(self, st) -> int:
        return 2

    def done(self, ctx, st) -> bool:
        return st["sent_height"]


def build_tree(net: Network, root: int) -> Tree:
    """Run the BFS/height phase on ``net`` and return the resulting tree."""
    res = net.run(TreeBuilder(root), name="bfs-tree")
    return Tree.from_states(root, res.states)


def tree_state(tree: Tree, v: int) -> dict:
    return {
        "parent": tree.parent[v],
        "depth": tree.depth[v],
        "height": tree.height[v],
        "children": list(tree.children[v]),
    }


def tree_words(tree: Tree, v: int) -> int:
    return TREE_WORDS


class Convergecast(NodeProgram):
    """Pipelined aggregation of ``x`` slots toward the root.

    A node of height ``h`` forwards its slot ``j`` in round ``h + j + 1``;
    every child has height below ``h`` and so has already delivered slot ``j``.
    With ``keep_children`` the per-child slot vectors are retained too.
    """

    def __init__(self, tree: Tree, values, combine, keep_children=False):
        self.tree = tree
        self.values = values
        self.combine = combine
        self.keep_children = keep_children
        self.x = len(values[0]) if values else 0

    def init(self, ctx):
        v = ctx.node
        st = tree_state(self.tree, v)
        st["agg"] = list(self.values[v])
        st["next"] = 0
        if self.keep_children:
            st["kids"] = {c: [] for c in self.tree.children[v]}
        return st

    def send(self, ctx, st):
        if st["parent"] is None or st["next"] >= self.x:
            return st, ()
        j = ctx.round - st["height"] - 1
        if j != st["next"]:
            return st, ()
        st["next"] += 1
        return st, {st["parent"]: st["agg"][j]}

    def receive(self, ctx, st, inbox):
        for src, val in inbox:
            j = ctx.round - self.tree.height[src] - 1
            st["agg"][j] = self.combine(st["agg"][j], val)
            if self.keep_children:
                st["kids"][src].append(val)
        return st, ()

    def size(self, st):
        words = TREE_WORDS + len(st["agg"])
        if self.keep_children:
            words += sum(len(v) for v in st["kids"].values())
        return words

    def done(self, ctx, st):
        if st["parent"] is not None:
            return st["next"] >= self.x
        return self.x == 0 or st["height"] == 0 or ctx.round >= st["height"] + self.x - 1


class Broadcast(NodeProgram):
    """Pipelined broadcast of a word list from the root down ``tree``."""

    def __init__(self, tree: Tree, words: Sequence):
        self.tree = tree
        self.words = list(words)

    def init(self, ctx):
        v = ctx.node
        st = tree_state(self.tree, v)
        st["got"] = list(self.words) if v == self.tree.root else []
        st["fwd"] = 0
        return st

    def send(self, ctx, st):
        if st["fwd"] < len(st["got"]) and st["children"]:
            w = st["got"][st["fwd"]]
            st["fwd"] += 1
            return st, {c: w for c in st["children"]}
        return st, ()

    def receive(self, ctx, st, inbox):
        for _, w in inbox:
            st["got"].append(w)
        if not st["children"]:
            st["fwd"] = len(st["got"])
        return st, ()

    def size(self, st):
        return TREE_WORDS + len(st["got"]) + 1

    def done(self, ctx, st):
        return len(st["got"]) == len(self.words) and st["fwd"] == len(self.words)


def broadcast(net: Network, tree: Tree, words: Sequence) -> list:
    """Deliver ``words`` from the root to every node; returns per-node copies."""
    if not words or net.n == 1:
        return [list(words) for _ in range(net.n)]
    res = net.run(Broadcast(tree, words), name="broadcast")
    return [s["got"] for s in res.states]


@dataclass
class AggregateResult:
    aggregates: list  # per node: fold of each slot over its subtree
    tree: Tree
    metrics: object
    children_values: Optional[list] = None


def convergecast(net: Network, tree: Tree, values, combine, keep_children=False):
    x = len(values[0]) if values else 0
    if x > net.mu:
        raise MemoryExceeded(tree.root, net.metrics.rounds_total, x, net.mu)
    res = net.run(Convergecast(tree, values, combine, keep_children), name="convergecast")
    aggs = [s["agg"] for s in res.states]
    kids = [s.get("kids") for s in res.states] if keep_children else None
    return aggs, kids


def aggregate_up_tree(
    graph: Graph,
    root: int,
    values: Sequence[Sequence[int]],
    combine: Callable = operator.add,
    mu: Optional[int] = None,
    seed: int = 0,
    net: Optional[Network] = None,
) -> AggregateResult:
    """Every node learns, per slot, the fold of ``combine`` over its subtree.

    Builds a BFS tree from ``root`` and pipelines all ``x`` slots upward, for
    ``O(x + D)`` rounds in total.  Pass ``net`` to run as a phase of a larger
    execution (then ``mu`` and ``seed`` come from it).
    """
    if net is None:
        if mu is None:
            mu = max(graph.max_degree, 1) + 2 * (len(values[0]) if values else 0) + 8
        net = Network(graph, mu, seed)
    snap = net.snapshot()
    tree = build_tree(net, root)
    aggs, _ = convergecast(net, tree, [list(v) for v in values], combine)
    metrics = net.metrics_since(snap)
    return AggregateResult(aggs, tree, metrics)


def degree_class(deg: int) -> int:
    return int(math.floor(math.log2(deg))) if deg >= 1 else 0


def class_count(n: int) -> int:
    return degree_class(max(n - 1, 1)) + 1


class IntervalSplit(NodeProgram):
    """Top-down assignment of new ids from per-class interval starts.

    Slot ``j`` of a node's start vector arrives in round ``depth + j``; it
    takes its own id from its class slot and hands each child the start
    vector shifted by itself and the earlier siblings' class counts.
    """

    def __init__(self, tree, classes, kids, root_starts):
        self.tree = tree
        self.classes = classes
        self.kids = kids
        self.root_starts = root_starts
        self.x = len(root_starts)

    def init(self, ctx):
        v = ctx.node
        st = tree_state(self.tree, v)
        st["kids"] = self.kids[v]
        st["starts"] = list(self.root_starts) if v == self.tree.root else []
        st["new_id"] = None
        st["sent"] = 0
        if v == self.tree.root:
            st["new_id"] = self.root_starts[self.classes[v]]
        return st

    def _child_slot(self, v, st, child, j):
        val = st["starts"][j] + (1 if self.classes[v] == j else 0)
        for c in st["children"]:
            if c == child:
                break
            val += st["kids"][c][j]
        return val

    def send(self, ctx, st):
        v = ctx.node
        j = st["sent"]
        if not st["children"] or j >= self.x or j >= len(st["starts"]):
            return st, ()
        if v != self.tree.root and ctx.round < st["depth"] + j + 1:
            return st, ()
        st["sent"] += 1
        return st, {c: self._child_slot(v, st, c, j) for c in st["children"]}

    def receive(self, ctx, st, inbox):
        v = ctx.node
        for _, val in inbox:
            st["starts"].append(val)
            if len(st["starts"]) - 1 == self.classes[v]:
                st["new_id"] = val
        if not st["children"]:
            st["sent"] = len(st["starts"])
        return st, ()

    def size(self, st):
        kids = sum(len(v) for v in st["kids"].values())
        return TREE_WORDS + kids + len(st["starts"]) + 1

    def done(self, ctx, st):
        return len(st["starts"]) == self.x and st["sent"] >= self.x


@dataclass
class Relabeling:
    new_ids: list  # 1-based ids in [n]
    table: list  # table[c] = number of nodes whose degree class is c
    tree: Tree
    metrics: object

    def class_of_id(self, new_id: int) -> int:
        """Degree class of the node holding ``new_id``, computed from the table alone."""
        upper = 0
        for c, count in enumerate(self.table):
            upper += count
            if new_id <= upper:
                return c
        raise ValueError(f"id {new_id} outside 1..{upper}")


def relabel_by_degree_class(
    graph: Graph,
    mu: Optional[int] = None,
    seed: int = 0,
    degrees: Optional[Sequence[int]] = None,
    net: Optional[Network] = None,
    root: int = 0,
    tree: Optional[Tree] = None,
) -> Relabeling:
    """Assign ids in ``1..n`` so that degree classes occupy contiguous intervals.

    The class of a node is ``floor(log2 deg)``.  Class counts are aggregated
    at the root, intervals are split top-down, and the count table is
    broadcast so that any node can map an id back to its class.
    ``degrees`` overrides the communication-graph degrees (used when the
    input graph differs from the network).  A prebuilt ``tree`` skips the
    BFS phase.
    """
    n = graph.n
    if degrees is None:
        degrees = [graph.degree(v) for v in range(n)]
    x = class_count(n)
    if net is None:
        if mu is None:
            mu = (graph.max_degree + 2) * (x + 1) + 16
        net = Network(graph, mu, seed)
    snap = net.snapshot()
    classes = [degree_class(d) for d in degrees]
    if tree is None:
        tree = build_tree(net, root)
    indicators = [[1 if classes[v] == c else 0 for c in range(x)] for v in range(n)]
    aggs, kids = convergecast(net, tree, indicators, operator.add, keep_children=True)
    table = aggs[tree.root]
    starts, acc = [], 1
    for c in range(x):
        starts.append(acc)
        acc += table[c]
    if n == 1:
        new_ids = [starts[classes[0]]]
    else:
        res = net.run(IntervalSplit(tree, classes, kids, starts), name="relabel-split")
        new_ids = [s["new_id"] for s in res.states]
        broadcast(net, tree, table)
    return Relabeling(new_ids, list(table), tree, net.metrics_since(snap))
