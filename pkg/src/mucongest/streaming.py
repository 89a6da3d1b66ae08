"""Running edge-streaming algorithms on a single node of the network.

The simulator is a maximum-degree node ``s``.  Edges reach ``s`` over a
BFS tree as one collision-free stream: every edge gets a
global position and is sent so that it arrives at ``s`` in the round given
by that position, with relays forwarding immediately.  In the cached
variant ``s`` hands the j-th edge it processed to neighbor ``j mod deg(s)``,
so later passes are replayed by the neighbors in ``ceil(m / deg(s))``
rounds, reproducing the first pass's order exactly.  The naive variant
collects everything again in every pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .engine import MetricsRecord, Network, NodeProgram, words_of
from .errors import InsufficientMemory, InvalidParams, MemoryExceeded
from .graphs import Graph, cycle_of_cliques
from .trees import TREE_WORDS, Tree, build_tree, convergecast


class StreamAlgorithm:
    """An edge-streaming algorithm with an ``M``-word state.

    ``process`` consumes one edge ``(u, v)`` with ``u < v``; ``end_pass``
    returns the new state and whether another pass is wanted.  Outputs that
    leave the simulator go through ``self.emit``.
    """

    name = "stream"

    def __init__(self, memory_budget: int, passes: Optional[int] = 1):
        self.M = memory_budget
        self.passes = passes
        self.emit: Callable = lambda item: None

    def init(self):
        return None

    def process(self, state, item):
        return state

    def end_pass(self, state, index: int):
        return state, self.passes is None or index + 1 < self.passes

    def result(self, state):
        return state

    def size(self, state) -> int:
        return words_of(state)


class EdgeCount(StreamAlgorithm):
    """Counts the edges of the last pass (every pass sees all of them)."""

    name = "edge_count"

    def __init__(self, passes: int = 1):
        super().__init__(1, passes)

    def init(self):
        return 0

    def process(self, state, item):
        return state + 1

    def end_pass(self, state, index):
        more = index + 1 < self.passes
        return (0 if more else state), more


class MaxId(StreamAlgorithm):
    """Largest endpoint id seen."""

    name = "max_id"

    def __init__(self, passes: int = 3):
        super().__init__(1, passes)

    def init(self):
        return -1

    def process(self, state, item):
        return max(state, *item)


class TriangleCount2Pass(StreamAlgorithm):
    """Exact triangle count in pairs of passes with ``M`` words.

    The first pass of a pair stores the higher neighborhoods ``N+(p)`` of
    consecutive pivots ``p = lo, lo+1, ...`` for as many pivots as fit,
    evicting the highest pivot whenever the budget overflows; the second
    pass counts edges inside each stored ``N+(p)``, so every triangle is
    counted once at its smallest vertex.  Pairs repeat until every vertex
    has been a pivot.
    """

    name = "triangle_count_2pass"
    OVERHEAD = 2  # (phase, lo, hi) packed in one word, plus the count

    def __init__(self, n: int, memory_budget: Optional[int] = None):
        super().__init__(n if memory_budget is None else memory_budget, None)
        self.n = n

    def init(self):
        return {"phase": 0, "lo": 0, "hi": self.n, "count": 0, "nbrs": {}}

    def process(self, st, item):
        u, v = item
        if st["phase"] == 0:
            if st["lo"] <= u < st["hi"]:
                st["nbrs"].setdefault(u, []).append(v)
                while self.size(st) > self.M:
                    top = max(st["nbrs"])
                    if top == st["lo"]:
                        raise InsufficientMemory(
                            f"N+({top}) does not fit in M={self.M} words"
                        )
                    del st["nbrs"][top]
                    st["hi"] = top
        else:
            for nb in st["nbrs"].values():
                if u in nb and v in nb:
                    st["count"] += 1
        return st

    def end_pass(self, st, index):
        if st["phase"] == 0:
            st["phase"] = 1
            return st, True
        st["phase"] = 0
        st["lo"] = st["hi"]
        st["hi"] = self.n
        st["nbrs"] = {}
        return st, st["lo"] < self.n

    def result(self, st):
        return st["count"]

    def size(self, st):
        return self.OVERHEAD + sum(len(x) for x in st["nbrs"].values())


class ConnectivityForest(StreamAlgorithm):
    """Union-find over ``n`` parent pointers; forest edges are emitted."""

    name = "connectivity_spanning_forest"

    def __init__(self, n: int, passes: int = 1):
        super().__init__(n, passes)
        self.n = n

    def init(self):
        return list(range(self.n))

    @staticmethod
    def _find(parent, x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def process(self, parent, item):
        a, b = self._find(parent, item[0]), self._find(parent, item[1])
        if a != b:
            parent[max(a, b)] = min(a, b)
            self.emit(item)
        return parent

    def result(self, parent):
        return sum(1 for v in range(self.n) if self._find(parent, v) == v)


REGISTRY = {
    "edge_count": lambda graph, **kw: EdgeCount(**kw),
    "max_id": lambda graph, **kw: MaxId(**kw),
    "triangle_count_2pass": lambda graph, **kw: TriangleCount2Pass(graph.n, **kw),
    "connectivity_spanning_forest": lambda graph, **kw: ConnectivityForest(graph.n, **kw),
}


def make_algorithm(name: str, graph: Graph, **params) -> StreamAlgorithm:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise InvalidParams(f"unknown streaming algorithm {name!r}") from None
    try:
        return factory(graph, **params)
    except TypeError as exc:
        raise InvalidParams(f"bad parameters for {name}: {exc}") from None


def run_centrally(alg: StreamAlgorithm, passes: list):
    """Feed ``passes`` (one item list per pass) to ``alg`` directly."""
    emitted: list = []
    alg.emit = emitted.append
    state = alg.init()
    for index, items in enumerate(passes):
        for item in items:
            state = alg.process(state, item)
        state, _ = alg.end_pass(state, index)
    return alg.result(state), emitted


# ---------------------------------------------------------------------------
# network protocols


def simulator_node(graph: Graph) -> int:
    """Maximum-degree node, lowest id on ties."""
    return max(range(graph.n), key=lambda v: (graph.degree(v), -v))


def owned_edges(graph: Graph, v: int, s: int) -> list:
    """Edges ``v`` puts into the stream.

    An edge at the simulator is sent by its other endpoint; any other edge by
    its lower-id endpoint.  The simulator itself sends nothing, so it sees
    every edge, its own included, as a stream item.
    """
    if v == s:
        return []
    return [(min(v, w), max(v, w)) for w in graph.adj[v] if w == s or w > v]


class OffsetSplit(NodeProgram):
    """Top-down hand-out of stream positions: own edges first, then each
    child's subtree in child order.  The root also passes down the tree
    height so that every node can time its sends."""

    def __init__(self, tree: Tree, own: list, kids: list):
        self.tree = tree
        self.own = own
        self.kids = kids

    def init(self, ctx):
        v = ctx.node
        root = v == self.tree.root
        return {
            "start": 0 if root else None,
            "height": self.tree.height[v] if root else None,
            "kids": {c: k[0] for c, k in self.kids[v].items()},
            "sent": False,
        }

    def send(self, ctx, st):
        if st["start"] is None or st["sent"]:
            return st, ()
        st["sent"] = True
        out = {}
        pos = st["start"] + self.own[ctx.node]
        for c in self.tree.children[ctx.node]:
            out[c] = (pos, st["height"])
            pos += st["kids"][c]
        st["kids"] = {}
        return st, out

    def receive(self, ctx, st, inbox):
        for _, (start, height) in inbox:
            st["start"], st["height"] = start, height
        return st, ()

    def size(self, st):
        return TREE_WORDS + len(st["kids"]) + (st["start"] is not None)

    def done(self, ctx, st):
        return st["sent"]


@dataclass
class StreamPlan:
    simulator: int
    tree: Tree
    starts: list
    height: int
    stream_length: int  # edges that travel to the simulator


def plan_stream(net: Network, graph: Graph, s: int) -> StreamPlan:
    """BFS tree at ``s``, subtree edge counts up, stream positions down."""
    tree = build_tree(net, s)
    own = [len(owned_edges(graph, v, s)) for v in range(graph.n)]
    if graph.n == 1:
        return StreamPlan(s, tree, [0], 0, 0)
    aggs, kids = convergecast(net, tree, [[c] for c in own], lambda a, b: a + b, keep_children=True)
    res = net.run(OffsetSplit(tree, own, kids), name="stream-offsets")
    starts = [st["start"] for st in res.states]
    return StreamPlan(s, tree, starts, tree.height[s], aggs[s][0])


class _StreamPass(NodeProgram):
    """One collection pass; with ``cache`` the simulator fans edges out to
    its neighbors round-robin after processing them."""

    def __init__(self, graph, plan, alg, cache, log):
        self.graph = graph
        self.plan = plan
        self.alg = alg
        self.cache = cache
        self.log = log
        self.s = plan.simulator
        self.sim_nbrs = graph.adj[self.s]

    def send(self, ctx, st):
        v, r = ctx.node, ctx.round
        out = {}
        if v == self.s:
            for dst, item in st["fanout"]:
                out[dst] = item
            st["fanout"] = []
            return st, out
        parent = self.plan.tree.parent[v]
        if st["held"] is not None:
            out[parent] = st["held"]
            st["held"] = None
        k = r - 1 - self.plan.height + self.plan.tree.depth[v] - self.plan.starts[v]
        mine = owned_edges(self.graph, v, self.s)
        if 0 <= k < len(mine):
            if parent in out:
                raise AssertionError("stream positions collided")
            out[parent] = mine[k]
        return st, out

    def receive(self, ctx, st, inbox):
        v = ctx.node
        if v != self.s:
            for src, item in inbox:
                if self.cache and src == self.s:
                    st["cache"].append(item)
                else:
                    st["held"] = item
            return st, ()
        items = [item for _, item in inbox]
        emitted: list = []
        self.alg.emit = emitted.append
        for item in items:
            st["alg"] = self.alg.process(st["alg"], item)
            used = self.alg.size(st["alg"])
            if used > self.alg.M:
                raise MemoryExceeded(v, ctx.round, used, self.alg.M)
            self.log.append(item)
            if self.cache:
                st["fanout"].append((self.sim_nbrs[st["j"] % len(self.sim_nbrs)], item))
                st["j"] += 1
        return st, emitted

    def size(self, st):
        words = TREE_WORDS + 1
        if "alg" in st:
            return words + self.alg.size(st["alg"]) + len(st["fanout"]) + 1
        return words + (st["held"] is not None) + len(st.get("cache", ()))


class _Replay(NodeProgram):
    """Neighbors resend their cached edges, the i-th one in round i."""

    def __init__(self, graph, s, alg, log):
        self.graph = graph
        self.s = s
        self.alg = alg
        self.log = log

    def send(self, ctx, st):
        if ctx.node == self.s or "cache" not in st:
            return st, ()
        i = ctx.round - 1
        if i < len(st["cache"]):
            return st, {self.s: st["cache"][i]}
        return st, ()

    def receive(self, ctx, st, inbox):
        if ctx.node != self.s:
            return st, ()
        emitted: list = []
        self.alg.emit = emitted.append
        for _, item in sorted(inbox):
            st["alg"] = self.alg.process(st["alg"], item)
            used = self.alg.size(st["alg"])
            if used > self.alg.M:
                raise MemoryExceeded(ctx.node, ctx.round, used, self.alg.M)
            self.log.append(item)
        return st, emitted

    def size(self, st):
        if "alg" in st:
            return TREE_WORDS + 1 + self.alg.size(st["alg"])
        return TREE_WORDS + 1 + len(st.get("cache", ()))


@dataclass
class StreamRun:
    result: object
    metrics: MetricsRecord
    simulator: int
    pass_items: list  # item sequence processed in each pass
    pass_rounds: list
    setup_rounds: int
    outputs: list = field(default_factory=list)

    @property
    def passes(self) -> int:
        return len(self.pass_items)

    def __iter__(self):
        yield self.result
        yield self.metrics


def _check_network(graph: Graph):
    if not graph.is_connected():
        raise InvalidParams("streaming simulation needs a connected graph")


def _run_passes(graph, alg, mu, seed, cached, net=None, max_passes=10_000) -> StreamRun:
    _check_network(graph)
    s = simulator_node(graph)
    if net is None:
        net = Network(graph, mu, seed)
    snap = net.snapshot()
    plan = plan_stream(net, graph, s)
    setup = net.metrics_since(snap).rounds_total
    states = []
    for v in range(graph.n):
        st = {"held": None}
        if v == s:
            st = {"alg": alg.init(), "fanout": [], "j": 0}
        elif cached and v in graph.adj[s]:
            st["cache"] = []
        states.append(st)
    pass_items, pass_rounds, outputs = [], [], []
    last_collect = plan.stream_length + plan.height + (2 if cached else 1)
    index = 0
    more = True
    while more and index < max_passes:
        log: list = []
        if index == 0 or not cached:
            prog = _StreamPass(graph, plan, alg, cached and index == 0, log)
            halt = last_collect if graph.n > 1 else 1
        else:
            prog = _Replay(graph, s, alg, log)
            halt = max((len(st.get("cache", ())) for st in states), default=0)
        res = net.run(prog, states=states, halt=lambda _n, _s, r, h=halt: r >= h, name=f"pass-{index}")
        states = res.states
        outputs.extend(item for _, item in res.outputs)
        states[s]["alg"], more = alg.end_pass(states[s]["alg"], index)
        pass_items.append(log)
        pass_rounds.append(res.metrics.rounds_total)
        index += 1
    result = alg.result(states[s]["alg"])
    return StreamRun(result, net.metrics_since(snap), s, pass_items, pass_rounds, setup, outputs)


def simulate_p_pass(graph: Graph, alg: StreamAlgorithm, mu: int, seed: int = 0, net=None) -> StreamRun:
    """Cached simulation: one collection pass, then neighbor replays.

    Needs ``mu >= M + n`` so a neighbor can cache its share of the stream.
    """
    if mu < alg.M + graph.n:
        raise InsufficientMemory(f"cached simulation needs mu >= M + n = {alg.M + graph.n}, got {mu}")
    return _run_passes(graph, alg, mu, seed, cached=True, net=net)


def naive_p_pass(graph: Graph, alg: StreamAlgorithm, mu: int, seed: int = 0, net=None) -> StreamRun:
    """Baseline that collects every edge again in each pass."""
    if mu < alg.M:
        raise InsufficientMemory(f"naive simulation needs mu >= M = {alg.M}, got {mu}")
    return _run_passes(graph, alg, mu, seed, cached=False, net=net)


def adversarial_instance(n: int, delta: int) -> Graph:
    """Cycle of (delta-1)-cliques: only two edges leave each clique."""
    return cycle_of_cliques(n, delta)
