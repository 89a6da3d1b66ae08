"""Distributed merging of streaming summaries at three mergeability levels.

* one-way: cut a BFS tree into clusters of about ``s = sqrt(|I| M)`` input
  items, summarize each cluster at its lowest-id member, and fold the cluster
  summaries one after another at the tree root;
* fully mergeable: recurse on centroids of the BFS tree and combine subtree
  summaries in pairs through the centroid;
* composable: the same recursion, but the centroid merges all subtree
  summaries at once by streaming aligned words.

Node inputs are read-only local data, like adjacency lists, and are not
charged as memory.  Summaries, buffers and words in transit are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .engine import MetricsRecord, Network, NodeProgram
from .errors import InsufficientMemory, InvalidParams, MemoryExceeded
from .graphs import Graph
from .sketches import SketchKind, make_sketch
from .transport import PathSchedule, Transfer, TransferHooks, run_transfers, tree_path
from .trees import TREE_WORDS, Tree, bfs_tree, broadcast, build_tree, convergecast, tree_state

# ---------------------------------------------------------------------------
# clusters


@dataclass
class Cluster:
    head: int  # node whose rule formed the cluster
    members: list
    mass: int
    kind: str  # singleton | greedy | leftover | root

    @property
    def leader(self) -> int:
        return min(self.members)


@dataclass
class ClusterPlan:
    s: float
    clusters: list
    masses: list
    messages: list  # value each node reported to its parent

    @property
    def total(self) -> int:
        return sum(self.masses)

    def leader_of(self) -> list:
        out: list = [None] * len(self.masses)
        for c in self.clusters:
            for v in c.members:
                out[v] = c.leader
        return out

    def count_bound(self) -> int:
        n = len(self.masses)
        return min(n, math.ceil(2 * self.total / self.s)) if self.total else 0

    def violations(self) -> list:
        """Every broken structural guarantee, as readable strings."""
        s, bad = self.s, []
        seen: dict = {}
        for c in self.clusters:
            for v in c.members:
                if v in seen:
                    bad.append(f"node {v} in two clusters")
                seen[v] = c
            if c.mass != sum(self.masses[v] for v in c.members):
                bad.append(f"cluster at {c.head} has wrong mass")
            if c.kind == "greedy" and not s <= c.mass <= 3 * s:
                bad.append(f"greedy cluster at {c.head} has mass {c.mass}")
            if c.kind == "singleton" and (c.members != [c.head] or c.mass < s):
                bad.append(f"singleton at {c.head} is not heavy")
            if c.kind == "leftover":
                if not 0 < c.mass < s:
                    bad.append(f"leftover cluster at {c.head} has mass {c.mass}")
                if self.masses[c.head] < s:
                    bad.append(f"leftover cluster at {c.head} without a heavy head")
            if c.kind == "root" and not 0 < c.mass < 2 * s:
                bad.append(f"root cluster has mass {c.mass}")
        for v, t in enumerate(self.masses):
            if t > 0 and v not in seen:
                bad.append(f"node {v} with input is unclustered")
        if any(msg >= 2 * s for msg in self.messages):
            bad.append("a reported mass reached 2s")
        if len(self.clusters) > self.count_bound():
            bad.append(f"{len(self.clusters)} clusters exceed {self.count_bound()}")
        return bad


def _split_children(tv, kids, s, is_leaf):
    """One node's step of the leaf-up rule.

    ``kids`` is ``[(child, reported mass), ...]`` in child-id order.  Returns
    ``(groups, leftover, heavy, message)`` where ``groups`` are lists of
    children closing a cluster of mass in ``[s, 3s)``.
    """
    if is_leaf:
        heavy = tv > s
        return [], [], heavy, 0 if heavy else tv
    groups, cur, mass = [], [], 0
    for c, tau in kids:
        cur.append(c)
        mass += tau
        if mass >= s:
            groups.append(cur)
            cur, mass = [], 0
    heavy = tv >= s
    return groups, cur, heavy, 0 if heavy else tv + mass


def partition_clusters(tree: Tree, t: Sequence[int], s: float) -> ClusterPlan:
    """Leaf-up greedy clustering of the input mass ``t`` on ``tree``.

    A leftover group may stay below ``s`` when its head is heavy, and the
    root's own remainder joins the root's last group when that keeps it
    within ``3s``; otherwise it becomes a cluster of its own.
    """
    if s < 1:
        raise InvalidParams("s must be at least 1")
    n = tree.n
    pending: list = [[] for _ in range(n)]
    message = [0] * n
    clusters: list = []
    order = sorted(range(n), key=lambda v: -tree.depth[v])

    def gather(children):
        members = sorted(x for c in children for x in pending[c])
        return members, sum(t[x] for x in members)

    for v in order:
        kids = [(c, message[c]) for c in tree.children[v]]
        groups, leftover, heavy, msg = _split_children(t[v], kids, s, not kids)
        made = []
        for g in groups:
            members, mass = gather(g)
            made.append(Cluster(v, members, mass, "greedy"))
        rest, rest_mass = gather(leftover)
        if heavy:
            made.append(Cluster(v, [v], t[v], "singleton"))
            if rest_mass > 0:
                made.append(Cluster(v, rest, rest_mass, "leftover"))
        else:
            pending[v] = sorted([v] + rest)
        if v == tree.root and not heavy:
            mass = t[v] + rest_mass
            greedy = [c for c in made if c.kind == "greedy"]
            if 0 < mass < s and greedy and greedy[-1].mass + mass <= 3 * s:
                last = greedy[-1]
                last.members = sorted(last.members + pending[v])
                last.mass += mass
            elif mass > 0:
                made.append(Cluster(v, pending[v], mass, "root"))
            msg = 0
        message[v] = msg
        clusters.extend(made)
    return ClusterPlan(s, clusters, list(t), message)


# ---------------------------------------------------------------------------
# centroids


def _heavy_walk(root, children, sub):
    total = sub[root]
    u, steps = root, 0
    while True:
        heavy = [c for c in children[u] if sub[c] * 2 > total]
        if not heavy:
            return u, steps
        u = heavy[0]
        steps += 1


def _subtree_sums(root, children, masses) -> dict:
    order, stack = [], [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(children[v])
    sub = {}
    for v in reversed(order):
        sub[v] = masses[v] + sum(sub[c] for c in children[v])
    return sub


def find_centroid(tree: Tree, masses: Sequence[int]) -> int:
    """Node whose removal leaves no part with more than half the mass.

    Starts at the root and steps into a child subtree heavier than half of
    the total until there is none.
    """
    sub = _subtree_sums(tree.root, tree.children, masses)
    return _heavy_walk(tree.root, tree.children, sub)[0]


def centroid_parts(tree: Tree, masses: Sequence[int], u: int) -> list:
    """Masses of the pieces left after deleting ``u`` from ``tree``."""
    sub = _subtree_sums(tree.root, tree.children, masses)
    parts = [sub[c] for c in tree.children[u]]
    if u != tree.root:
        parts.append(sub[tree.root] - sub[u])
    return parts


# ---------------------------------------------------------------------------
# centralized replays


def replay_merge_log(inputs: Sequence[Sequence[int]], kind: SketchKind, log: Sequence) -> object:
    """Recompute a result from a recorded merge structure.

    Entries are ``("leaf", id, node)``, ``("merge", id, a, b)`` or
    ``("compose", id, [ids])``; the last entry names the result.
    """
    memo: dict = {}
    for entry in log:
        op, out = entry[0], entry[1]
        if op == "leaf":
            memo[out] = kind.summarize(inputs[entry[2]])
        elif op == "merge":
            memo[out] = memo[entry[2]].merged(memo[entry[3]])
        elif op == "compose":
            ids = entry[2]
            acc = memo[ids[0]]
            for i in ids[1:]:
                acc = acc.merged(memo[i])
            memo[out] = acc
        else:
            raise ValueError(f"unknown merge op {op!r}")
    return memo[log[-1][1]] if log else kind.new()


def one_way_oracle(inputs, kind: SketchKind, plan: ClusterPlan, arrivals: dict, fold_order: Sequence[int]):
    """Summarize each cluster in its leader's arrival order, then fold the
    cluster summaries in ``fold_order``."""
    result = None
    for leader in fold_order:
        s = kind.summarize(inputs[leader])
        for member, idx in arrivals.get(leader, ()):
            s.insert(inputs[member][idx])
        result = s if result is None else result.merged(s)
    return result if result is not None else kind.new()


# ---------------------------------------------------------------------------
# shared plumbing


@dataclass
class MergeRun:
    result: object
    metrics: MetricsRecord
    stages: dict = field(default_factory=dict)
    plan: Optional[ClusterPlan] = None
    arrivals: dict = field(default_factory=dict)
    fold_order: list = field(default_factory=list)
    merge_log: list = field(default_factory=list)
    levels: int = 0
    leaders: list = field(default_factory=list)  # leader each node learned

    @property
    def rounds(self) -> int:
        return self.metrics.rounds_total

    def __iter__(self):
        yield self.result
        yield self.metrics


def _check_inputs(graph: Graph, inputs) -> list:
    if len(inputs) != graph.n:
        raise InvalidParams(f"need one input list per node, got {len(inputs)} for n={graph.n}")
    return [list(x) for x in inputs]


def _check_memory(graph: Graph, M: int, mu: int) -> None:
    delta = graph.max_degree
    if mu < delta + M:
        raise InsufficientMemory(f"mu={mu} is below delta + M = {delta + M}")
    # a merge holds both operands plus one word per link in transit
    need = delta + 2 * M + 1
    if mu < need:
        raise InsufficientMemory(f"merging two {M}-word summaries needs mu >= {need}, got {mu}")


def _within_budget(v: int, summary, M: int) -> None:
    words = summary.word_count()
    if words > M:
        raise MemoryExceeded(v, -1, words, M)


class _Stages:
    def __init__(self, net: Network):
        self.net = net
        self.rounds: dict = {}
        self._last = net.metrics.rounds_total

    def mark(self, name: str) -> None:
        now = self.net.metrics.rounds_total
        self.rounds[name] = self.rounds.get(name, 0) + now - self._last
        self._last = now


def _spread(net: Network, tree: Tree, summary) -> None:
    """Send the final summary from the root to every node."""
    words = summary.to_words()
    if words:
        broadcast(net, tree, words)


class _SummaryTransfer(TransferHooks):
    """Whole summaries travelling between nodes that hold them.

    ``app`` is ``{"held": {sid: summary}, "buf": {key: [words]}}``; the
    ``on_arrival`` callback decides what a completed summary turns into.
    """

    def __init__(self, kind: SketchKind, M: int, lengths: dict, sources: dict, on_arrival):
        self.kind = kind
        self.M = M
        self.lengths = lengths
        self.sources = sources  # key -> sid held at the sender
        self.on_arrival = on_arrival
        self._words: dict = {}

    def produce(self, v, app, key, idx):
        if idx == 0:
            self._words[key] = app["held"][self.sources[key]].to_words()
        return self._words[key][idx]

    def deliver(self, v, app, key, idx, word):
        buf = app["buf"].setdefault(key, [])
        buf.append(word)
        if len(buf) == self.lengths[key]:
            del app["buf"][key]
            summary = self.kind.from_words(buf)
            self.on_arrival(v, app, key, summary)
        return app

    def size(self, v, app):
        held = sum(s.word_count() for s in app["held"].values())
        return held + sum(len(b) for b in app["buf"].values())


# ---------------------------------------------------------------------------
# one-way


class _PartitionNode(NodeProgram):
    """Distributed leaf-up clustering.

    A node of height ``h`` reports the packed word ``(mass, lowest pending
    id)`` to its parent in round ``h + 1``, when every child has reported.
    It then keeps only which leader each child's pending part belongs to.
    """

    def __init__(self, tree: Tree, t: Sequence[int], s: float):
        self.tree = tree
        self.t = t
        self.s = s

    def init(self, ctx):
        st = tree_state(self.tree, ctx.node)
        st.update(kids={}, report=None, assign={}, own=None, lefts=[])
        return st

    def _decide(self, v, st):
        n = len(self.t)
        kids = [(c, st["kids"][c][0]) for c in st["children"]]
        low = {c: st["kids"][c][1] for c in st["children"]}
        reported = st.pop("kids")
        groups, leftover, heavy, msg = _split_children(self.t[v], kids, self.s, not kids)
        def tell(children, leader):
            st["assign"].update({c: leader for c in children if low[c] < n})

        for g in groups:
            tell(g, min(low[c] for c in g))
        rest_mass = sum(reported[c][0] for c in leftover)
        rest_low = min((low[c] for c in leftover), default=n)
        if heavy:
            st["own"] = v
            if rest_mass > 0:
                tell(leftover, rest_low)
            st["report"] = (0, n)
            return
        st["lefts"] = [c for c in leftover if low[c] < n]
        pend_low = min(v, rest_low)
        if st["parent"] is None:
            mass = self.t[v] + rest_mass
            last = groups[-1] if groups else None
            last_mass = sum(reported[c][0] for c in last) if last else 0
            if 0 < mass < self.s and last and last_mass + mass <= 3 * self.s:
                leader = min(pend_low, min(low[c] for c in last))
                tell(last, leader)
                st["own"] = leader
            elif mass > 0:
                st["own"] = pend_low
            msg = 0
        st["report"] = (msg, pend_low)

    def send(self, ctx, st):
        if ctx.round != st["height"] + 1:
            return st, ()
        self._decide(ctx.node, st)
        if st["parent"] is None:
            return st, ()
        return st, {st["parent"]: st["report"]}

    def receive(self, ctx, st, inbox):
        for src, word in inbox:
            st["kids"][src] = word
        return st, ()

    def size(self, st):
        return TREE_WORDS + len(st.get("kids", ())) + len(st["assign"]) + 2


class _LeaderNotice(NodeProgram):
    """Top-down: every clustered node learns its leader's id."""

    def send(self, ctx, st):
        out = {}
        if ctx.round == 1:
            out.update(st["assign"])
        if st["own"] is not None and not st.get("told"):
            st["told"] = True
            out.update({c: st["own"] for c in st["lefts"]})
        return st, out

    def receive(self, ctx, st, inbox):
        for _, leader in inbox:
            st["own"] = leader
        return st, ()

    def size(self, st):
        return TREE_WORDS + len(st["assign"]) + 2


class _Collect(TransferHooks):
    def __init__(self, inputs, M):
        self.inputs = inputs
        self.M = M

    def produce(self, v, app, key, idx):
        return self.inputs[v][idx]

    def deliver(self, v, app, key, idx, word):
        app.insert(word)
        _within_budget(v, app, self.M)
        return app

    def size(self, v, app):
        return app.word_count() if app is not None else 0


def simulate_one_way(
    graph: Graph,
    inputs: Sequence[Sequence[int]],
    alg,
    M: Optional[int] = None,
    mu: int = 0,
    seed: int = 0,
    net: Optional[Network] = None,
) -> MergeRun:
    """Cluster, summarize per cluster, fold at the root, broadcast.

    ``alg`` is a :class:`SketchKind` or a sketch name with ``eps`` given via
    :func:`make_sketch`.
    """
    inputs = _check_inputs(graph, inputs)
    kind = alg if isinstance(alg, SketchKind) else make_sketch(alg, 0.1, sum(map(len, inputs)))
    M = kind.budget if M is None else M
    _check_memory(graph, M, mu)
    if not graph.is_connected():
        raise InvalidParams("the network must be connected")
    net = net or Network(graph, mu, seed)
    stages = _Stages(net)
    n = graph.n
    root = 0
    tree = build_tree(net, root)
    stages.mark("tree")
    t = [len(x) for x in inputs]
    total = sum(t)
    if n > 1:
        aggs, _ = convergecast(net, tree, [[x] for x in t], lambda a, b: a + b)
        broadcast(net, tree, [aggs[root][0]])
    stages.mark("count")
    if total == 0:
        empty = ClusterPlan(1.0, [], t, [0] * n)
        return MergeRun(kind.new(), net.metrics, stages.rounds, plan=empty, leaders=[None] * n)
    s = max(1.0, math.sqrt(total * M))
    plan = partition_clusters(tree, t, s)
    halt_at = tree.height[root] + 1
    res = net.run(_PartitionNode(tree, t, s), halt=lambda _n, _s, r: r >= halt_at, name="partition")
    notice_at = tree.max_depth + 1
    res = net.run(_LeaderNotice(), states=res.states, halt=lambda _n, _s, r: r >= notice_at, name="leaders")
    leader_of = [st["own"] for st in res.states]
    stages.mark("partition")

    # members stream raw items to their leader
    sched = PathSchedule()
    for v in range(n):
        lead = leader_of[v]
        if t[v] and lead is not None and lead != v:
            sched.place(Transfer(("item", v), tree_path(tree.parent, tree.depth, v, lead), t[v]))
    leaders = sorted({c.leader for c in plan.clusters})
    apps: list = [None] * n
    for lead in leaders:
        apps[lead] = kind.summarize(inputs[lead])
        _within_budget(lead, apps[lead], M)
    apps = run_transfers(net, sched, _Collect(inputs, M), apps, name="cluster-collect")
    arrivals = {
        lead: [(key[1], idx) for _, _, key, idx in sched.arrival_log(lead)] for lead in leaders
    }
    stages.mark("collect")

    # cluster summaries folded one after another at the root
    fold = [lead for lead in leaders if lead == root] + [lead for lead in leaders if lead != root]
    held = [{"held": {}, "buf": {}} for _ in range(n)]
    for lead in leaders:
        held[lead]["held"][("cluster", lead)] = apps[lead]
    lengths, sources = {}, {}
    sched = PathSchedule()
    last = 0
    for lead in fold:
        if lead == root:
            continue
        key = ("cluster", lead)
        lengths[key] = apps[lead].word_count()
        sources[key] = key
        path = tree_path(tree.parent, tree.depth, lead, root)
        last = sched.place(Transfer(key, path, lengths[key], after=last)).last_arrival

    def fold_in(v, app, key, summary):
        run = app["held"].pop("run", None)
        if run is None and ("cluster", root) in app["held"]:
            run = app["held"].pop(("cluster", root))
        app["held"]["run"] = summary if run is None else run.merged(summary)
        _within_budget(v, app["held"]["run"], M)

    held = run_transfers(net, sched, _SummaryTransfer(kind, M, lengths, sources, fold_in), held, name="fold")
    top = held[root]["held"]
    result = top.get("run", top.get(("cluster", root)))
    stages.mark("fold")
    _spread(net, tree, result)
    stages.mark("broadcast")
    return MergeRun(result, net.metrics, stages.rounds, plan, arrivals, fold, leaders=leader_of)


# ---------------------------------------------------------------------------
# centroid recursion


class _ForestSum(NodeProgram):
    """Subtree masses inside every current component, leaves first."""

    def send(self, ctx, st):
        if not st["active"] or st["sent"] or len(st["heard"]) < len(st["kids"]):
            return st, ()
        st["sub"] = st["w"] + sum(st["heard"].values())
        st["sent"] = True
        if st["cp"] is None:
            return st, ()
        return st, {st["cp"]: st["sub"]}

    def receive(self, ctx, st, inbox):
        for src, val in inbox:
            st["heard"][src] = val
        return st, ()

    def size(self, st):
        return TREE_WORDS + 3 + len(st["heard"])


class _CentroidWalk(NodeProgram):
    """A token carrying the component total walks into heavy subtrees."""

    def send(self, ctx, st):
        total = st.get("token")
        if total is None:
            return st, ()
        st["token"] = None
        for c in st["kids"]:
            if 2 * st["heard"][c] > total:
                return st, {c: total}
        st["centroid"] = True
        return st, ()

    def receive(self, ctx, st, inbox):
        for _, total in inbox:
            st["token"] = total
        return st, ()

    def size(self, st):
        return TREE_WORDS + 4 + len(st["heard"])


class _Cut(NodeProgram):
    """Centroids leave; their neighbors re-root or forget them."""

    def send(self, ctx, st):
        if not st.get("centroid"):
            return st, ()
        targets = list(st["kids"]) + ([st["cp"]] if st["cp"] is not None else [])
        return st, {x: 1 for x in targets}

    def receive(self, ctx, st, inbox):
        for src, _ in inbox:
            if src == st["cp"]:
                st["cp"] = None
            else:
                st["kids"].remove(src)
        return st, ()

    def size(self, st):
        return TREE_WORDS + 3


def _component(states, root) -> list:
    out, stack = [], [root]
    while stack:
        v = stack.pop()
        out.append(v)
        stack.extend(states[v]["kids"])
    return out


def _decompose(net: Network, tree: Tree, w: Sequence[int]) -> list:
    """Run the centroid recursion's control phases; one entry per level.

    Each level lists ``(centroid, component root, parts)`` where ``parts``
    holds ``(attach point next to the centroid, part root)`` pairs.
    """
    n = net.n
    states = [
        {"cp": tree.parent[v], "kids": list(tree.children[v]), "w": w[v], "active": True}
        for v in range(n)
    ]
    levels = []
    while True:
        for st in states:
            st.update(sent=False, heard={}, sub=None, token=None, centroid=False)
        active = [v for v in range(n) if states[v]["active"]]
        if not active:
            break
        res = net.run(
            _ForestSum(),
            states=states,
            halt=lambda _n, sts, _r: all(sts[v]["sent"] for v in active),
            name="component-mass",
        )
        states = res.states
        roots = [v for v in active if states[v]["cp"] is None]
        live_roots = []
        for r in roots:
            if states[r]["sub"] > 0:
                states[r]["token"] = states[r]["sub"]
                live_roots.append(r)
            else:
                # nothing to summarize below this root: the part retires
                for v in _component(states, r):
                    states[v]["active"] = False
        if not live_roots:
            break
        res = net.run(
            _CentroidWalk(),
            states=states,
            halt=lambda _n, sts, _r: sum(st["centroid"] for st in sts) == len(live_roots),
            name="centroid-walk",
        )
        states = res.states
        level = []
        for r in live_roots:
            comp = _component(states, r)
            u = next(v for v in comp if states[v]["centroid"])
            parts = [(c, c) for c in states[u]["kids"]]
            if states[u]["cp"] is not None:
                parts.append((states[u]["cp"], r))
            level.append((u, r, sorted(parts)))
        res = net.run(_Cut(), states=states, halt=lambda _n, _s, rnd: rnd >= 1, name="cut")
        states = res.states
        for u, _, _ in level:
            states[u]["active"] = False
            states[u]["kids"] = []
            states[u]["cp"] = None
        levels.append(level)
    return levels


class _Composer(TransferHooks):
    """The centroid adds aligned words of every incoming sketch to its own."""

    def __init__(self, kind, sources, expected):
        self.kind = kind
        self.sources = sources
        self.expected = expected  # centroid -> number of incoming sketches
        self._words: dict = {}

    def produce(self, v, app, key, idx):
        if idx == 0:
            self._words[key] = app["held"][self.sources[key]].to_words()
        return self._words[key][idx]

    def deliver(self, v, app, key, idx, word):
        col = app["cols"].setdefault(idx, [])
        col.append(word)
        if len(col) == self.expected[v]:
            del app["cols"][idx]
            own = app["own_words"][idx]
            app["acc"] = app["proto"].compose_step(app["acc"], idx, [own] + col)
        return app

    def size(self, v, app):
        held = sum(s.word_count() for s in app["held"].values())
        extra = len(app.get("acc", ())) + sum(len(c) for c in app.get("cols", {}).values())
        return held + extra


def _recursive_merge(graph, inputs, kind, M, mu, seed, net, composable):
    inputs = _check_inputs(graph, inputs)
    _check_memory(graph, M, mu)
    if composable:
        kind.require_composable()
    if not graph.is_connected():
        raise InvalidParams("the network must be connected")
    net = net or Network(graph, mu, seed)
    stages = _Stages(net)
    n, root = graph.n, 0
    tree = build_tree(net, root)
    stages.mark("tree")
    # nodes with more than M items summarize them first, so no node carries
    # more than M units of mass into the recursion
    w = [min(len(x), M) for x in inputs]
    levels = _decompose(net, tree, w)
    stages.mark("decompose")
    if not levels:
        return MergeRun(kind.new(), net.metrics, stages.rounds)

    log: list = []
    counter = iter(range(1, 1 << 62))
    apps = [{"held": {}, "buf": {}} for _ in range(n)]
    result_of: dict = {}  # (level, part root) -> (holder, sid)
    for depth in range(len(levels) - 1, -1, -1):
        jobs = []
        for u, comp_root, parts in levels[depth]:
            incoming = []
            for attach, part_root in parts:
                found = result_of.get((depth + 1, part_root))
                if found is not None:
                    incoming.append((attach, found[0], found[1]))
            jobs.append((u, comp_root, incoming))

        # each part's summary moves to the part's node next to the centroid
        sched, lengths, sources = PathSchedule(), {}, {}
        for u, _, incoming in jobs:
            for attach, holder, sid in incoming:
                if holder != attach:
                    key = ("lift", sid)
                    lengths[key] = apps[holder]["held"][sid].word_count()
                    sources[key] = sid
                    sched.place(Transfer(key, tree_path(tree.parent, tree.depth, holder, attach), lengths[key]))

        def land(v, app, key, summary):
            app["held"][key[1]] = summary

        apps = run_transfers(net, sched, _SummaryTransfer(kind, M, lengths, sources, land), apps, name="lift")
        for u, _, incoming in jobs:
            for attach, holder, sid in incoming:
                if holder != attach:
                    del apps[holder]["held"][sid]
        stages.mark("lift")

        lives = {}
        for u, _, incoming in jobs:
            leaf = ("leaf", u)
            apps[u]["held"][leaf] = kind.summarize(inputs[u])
            _within_budget(u, apps[u]["held"][leaf], M)
            log.append(("leaf", leaf, u))
            lives[u] = sorted((attach, sid) for attach, _, sid in incoming)

        if composable:
            _compose_level(net, kind, M, apps, lives, log, counter)
        else:
            _pairwise_level(net, graph, kind, M, mu, apps, lives, log, counter, stages)
        stages.mark("merge")
        for u, comp_root, _ in jobs:
            result_of[(depth, comp_root)] = (u, apps[u]["result"])

    top_u, top_sid = result_of[(0, levels[0][0][1])]
    if top_u != root:
        key = ("home", top_sid)
        sched = PathSchedule()
        length = apps[top_u]["held"][top_sid].word_count()
        sched.place(Transfer(key, tree_path(tree.parent, tree.depth, top_u, root), length))

        def home(v, app, key, summary):
            app["held"][key[1]] = summary

        apps = run_transfers(net, sched, _SummaryTransfer(kind, M, {key: length}, {key: top_sid}, home), apps, name="home")
        del apps[top_u]["held"][top_sid]
    result = apps[root]["held"][top_sid]
    _spread(net, tree, result)
    stages.mark("broadcast")
    return MergeRun(result, net.metrics, stages.rounds, merge_log=log, levels=len(levels))


def _pairwise_level(net, graph, kind, M, mu, apps, lives, log, counter, stages):
    def fits(u):
        return (len(lives[u]) + 1) * M + graph.degree(u) + 1 <= mu

    while any(not fits(u) for u in lives):
        sched, lengths, sources, plans = PathSchedule(), {}, {}, {}
        for u, live in lives.items():
            if fits(u):
                continue
            nxt = []
            for i in range(0, len(live) - 1, 2):
                (a, sid_a), (b, sid_b) = live[i], live[i + 1]
                key = ("pair", sid_b)
                new = ("m", next(counter))
                lengths[key] = apps[b]["held"][sid_b].word_count()
                sources[key] = sid_b
                plans[key] = (sid_a, new, b)
                sched.place(Transfer(key, [b, u, a], lengths[key]))
                nxt.append((a, new))
                log.append(("merge", new, sid_a, sid_b))
            if len(live) % 2:
                nxt.append(live[-1])
            lives[u] = nxt

        def absorb(v, app, key, summary):
            sid_a, new, _ = plans[key]
            merged = app["held"].pop(sid_a).merged(summary)
            _within_budget(v, merged, M)
            app["held"][new] = merged

        apps[:] = run_transfers(net, sched, _SummaryTransfer(kind, M, lengths, sources, absorb), apps, name="pair")
        for key, (_, _, b) in plans.items():
            del apps[b]["held"][key[1]]

    # the remaining summaries fit at the centroid together
    sched, lengths, sources = PathSchedule(), {}, {}
    for u, live in lives.items():
        for a, sid in live:
            key = ("gather", sid)
            lengths[key] = apps[a]["held"][sid].word_count()
            sources[key] = sid
            sched.place(Transfer(key, [a, u], lengths[key]))

    def keep(v, app, key, summary):
        app["held"][key[1]] = summary

    apps[:] = run_transfers(net, sched, _SummaryTransfer(kind, M, lengths, sources, keep), apps, name="gather")
    for u, live in lives.items():
        for a, sid in live:
            apps[a]["held"].pop(sid, None)
        held = apps[u]["held"]
        acc_sid = ("leaf", u)
        acc = held.pop(acc_sid)
        for _, sid in live:
            new = ("m", next(counter))
            acc = acc.merged(held.pop(sid))
            _within_budget(u, acc, M)
            log.append(("merge", new, acc_sid, sid))
            acc_sid = new
        held[acc_sid] = acc
        apps[u]["result"] = acc_sid


def _compose_level(net, kind, M, apps, lives, log, counter):
    sched, sources, expected = PathSchedule(), {}, {}
    for u, live in lives.items():
        expected[u] = len(live)
        own = apps[u]["held"][("leaf", u)]
        if live:
            apps[u].update(proto=own, own_words=own.to_words(), acc=own.compose_init(), cols={})
        for a, sid in live:
            key = ("compose", sid)
            sources[key] = sid
            length = apps[a]["held"][sid].word_count()
            if length != own.word_count():
                raise InvalidParams("composable summaries must have equal word counts")
            sched.place(Transfer(key, [a, u], length))
    apps[:] = run_transfers(net, sched, _Composer(kind, sources, expected), apps, name="compose")
    for u, live in lives.items():
        leaf = ("leaf", u)
        if not live:
            apps[u]["result"] = leaf
            continue
        app = apps[u]
        combined = app["proto"].compose_finish(app.pop("acc"))
        for key in ("proto", "own_words", "cols"):
            app.pop(key, None)
        for a, sid in live:
            apps[a]["held"].pop(sid, None)
        del app["held"][leaf]
        new = ("m", next(counter))
        log.append(("compose", new, [leaf] + [sid for _, sid in live]))
        app["held"][new] = combined
        app["result"] = new


def simulate_fully_mergeable(
    graph: Graph,
    inputs: Sequence[Sequence[int]],
    alg: SketchKind,
    M: Optional[int] = None,
    mu: int = 0,
    seed: int = 0,
    net: Optional[Network] = None,
) -> MergeRun:
    """Centroid recursion with pairwise merging through each centroid."""
    M = alg.budget if M is None else M
    return _recursive_merge(graph, inputs, alg, M, mu, seed, net, composable=False)


def simulate_composable(
    graph: Graph,
    inputs: Sequence[Sequence[int]],
    alg: SketchKind,
    M: Optional[int] = None,
    mu: int = 0,
    seed: int = 0,
    net: Optional[Network] = None,
) -> MergeRun:
    """Centroid recursion where each centroid streams in all part summaries."""
    alg.require_composable()
    M = alg.budget if M is None else M
    return _recursive_merge(graph, inputs, alg, M, mu, seed, net, composable=True)


# ---------------------------------------------------------------------------
# exact frequent labels


@dataclass
class HeavyHitters:
    counts: dict  # label -> exact frequency, for every label with f >= eps*m
    candidates: dict  # every candidate's exact frequency
    m: int
    summary: object
    metrics: MetricsRecord

    def __iter__(self):
        yield self.counts
        yield self.metrics


def edge_inputs(graph: Graph, labels) -> list:
    """Give each edge's label to its lower-id endpoint."""
    if isinstance(labels, dict):
        pairs = [(e, labels[e]) for e in graph.edges]
    else:
        labels = list(labels)
        if len(labels) != graph.m:
            raise InvalidParams(f"need {graph.m} edge labels, got {len(labels)}")
        pairs = list(zip(graph.edges, labels))
    inputs: list = [[] for _ in range(graph.n)]
    for (u, v), label in pairs:
        inputs[min(u, v)].append(label)
    return inputs


def exact_heavy_hitters(
    graph: Graph,
    labels,
    eps: float,
    mu: int,
    seed: int = 0,
    net: Optional[Network] = None,
) -> HeavyHitters:
    """Exact counts of every edge label occurring at least ``eps*m`` times.

    A Misra-Gries pass at error ``eps/3`` nominates the labels whose estimate
    reaches ``2 eps m / 3``; their exact counts are then summed up the BFS tree.
    """
    inputs = edge_inputs(graph, labels)
    kind = make_sketch("mg", eps / 3)
    net = net or Network(graph, mu, seed)
    run = simulate_fully_mergeable(graph, inputs, kind, mu=mu, seed=seed, net=net)
    summary = run.result
    m = summary.m
    # every node holds the broadcast summary, so every node knows the candidates
    cands = sorted(x for x, c in summary.counters.items() if 3 * c >= 2 * eps * m)
    exact: dict = {}
    if cands:
        tree = bfs_tree(graph, 0)
        values = [[sum(1 for y in items if y == x) for x in cands] for items in inputs]
        if graph.n > 1:
            aggs, _ = convergecast(net, tree, values, lambda a, b: a + b)
        else:
            aggs = values
        exact = dict(zip(cands, aggs[0]))
    heavy = {x: c for x, c in exact.items() if c >= eps * m}
    if heavy and graph.n > 1:
        broadcast(net, bfs_tree(graph, 0), [w for x in sorted(heavy) for w in (x, heavy[x])])
    return HeavyHitters(heavy, exact, m, summary, net.metrics)
