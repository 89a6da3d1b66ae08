"""k-clique listing with bounded memory.

The all-to-all listing splits the vertices into groups, gives every
k-multiset of groups to its own master node, and lets each master walk a
subset cover of its vertex universe so that at no point does it hold more
edges than fit in memory.  Edge delivery is physically scheduled on the
complete communication graph by a greedy two-hop router.

The plain-network building blocks (local triangle listing, pruning of
low-degree nodes, the low-average-degree cluster filter) live here too.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .engine import MetricsRecord, Network, NodeProgram
from .errors import (
    BatchTooLarge,
    InvalidParams,
    ModelMismatch,
    PremiseViolated,
)
from .graphs import Graph
from .trees import aggregate_up_tree, broadcast


# ---------------------------------------------------------------------------
# subset covers


@dataclass
class SubsetCover:
    """A family of subsets of ``1..a`` such that every ``c``-subset lies in one.

    ``sets`` holds the collapsed family; ``z_raw`` counts the c-tuples of
    blocks taken with repetition and ``z_dedup`` the distinct unions among
    them.
    """

    a: int
    b: int
    c: int
    sets: list
    z_raw: int
    z_dedup: int
    block_size: int
    padded_a: int

    @property
    def z(self) -> int:
        return len(self.sets)

    def covers(self, subset: Iterable[int]) -> bool:
        s = set(subset)
        return any(s.issubset(t) for t in self.sets)


def build_subset_cover(a: int, b: int, c: int) -> SubsetCover:
    """Cover of ``1..a`` by unions of ``c`` blocks of size ``b/c``.

    The universe is padded with dummy elements up to a multiple of the block
    size; dummies are dropped from the returned sets.  Tuples that repeat a
    block give a union contained in some tuple of distinct blocks, so the
    collapsed family is the unions of c distinct blocks (or the single union
    of all blocks when there are fewer than c).
    """
    if c < 2:
        raise InvalidParams("c must be at least 2")
    if b > a:
        raise InvalidParams(f"b={b} exceeds a={a}")
    if c > b:
        raise InvalidParams(f"c={c} exceeds b={b}")
    if b % c:
        raise InvalidParams(f"c={c} must divide b={b}")
    size = b // c
    padded = -(-a // size) * size
    count = padded // size
    blocks = [list(range(i * size + 1, (i + 1) * size + 1)) for i in range(count)]

    def real(elems):
        return [e for e in elems if e <= a]

    z_raw = count**c
    z_dedup = sum(math.comb(count, r) for r in range(1, min(c, count) + 1))
    if count <= c:
        sets = [real(range(1, padded + 1))]
    else:
        sets = [
            real(itertools.chain.from_iterable(blocks[i] for i in combo))
            for combo in itertools.combinations(range(count), c)
        ]
    return SubsetCover(a, b, c, sets, z_raw, z_dedup, size, padded)


# ---------------------------------------------------------------------------
# brute-force oracles


def brute_force_cliques(graph: Graph, k: int) -> set:
    """All k-cliques of ``graph`` as sorted tuples, by extension of smaller ones."""
    if k < 1:
        return set()
    cliques = [(v,) for v in range(graph.n)]
    for _ in range(k - 1):
        grown = []
        for cl in cliques:
            last = cl[-1]
            for w in graph.adj[last]:
                if w > last and all(graph.has_edge(w, u) for u in cl[:-1]):
                    grown.append(cl + (w,))
        cliques = grown
    return set(cliques)


def brute_force_triangles(graph: Graph) -> set:
    return {
        (u, v, w)
        for u, v, w in itertools.combinations(range(graph.n), 3)
        if graph.has_edge(u, v) and graph.has_edge(v, w) and graph.has_edge(u, w)
    }


# ---------------------------------------------------------------------------
# two-hop routing on the complete graph


@dataclass
class RoutingSchedule:
    """Hops ``(round, sender, receiver, message index)`` and per-message arrival."""

    n: int
    hops: list = field(default_factory=list)
    arrival: list = field(default_factory=list)
    via: list = field(default_factory=list)  # relay node per message, or None

    @property
    def rounds(self) -> int:
        return max(self.arrival, default=0)

    def link_loads(self) -> dict:
        loads: dict = {}
        for r, u, v, _ in self.hops:
            loads[(r, u, v)] = loads.get((r, u, v), 0) + 1
        return loads


class TwoHopRouter:
    """Greedy earliest-arrival router on the complete graph.

    Each directed link keeps a next-free round.  A message either goes
    directly or through one relay that forwards it in the very next round,
    whichever arrives first (direct wins ties).  Relays never hold a word
    for more than one round.
    """

    def __init__(self, n: int, relay_ok: Optional[Sequence[bool]] = None):
        self.n = n
        self.free = np.ones((n, n), dtype=np.int64)
        mask = np.ones(n, dtype=bool) if relay_ok is None else np.asarray(relay_ok, bool)
        self.relay_ok = mask
        self.schedule = RoutingSchedule(n)

    def place(self, src: int, dst: int, release: int = 1) -> int:
        """Schedule one word from ``src`` to ``dst`` arriving no earlier than ``release``."""
        idx = len(self.schedule.arrival)
        free = self.free
        direct = max(int(free[src, dst]), release)
        first = np.maximum(free[src, :], free[:, dst] - 1)
        first = np.maximum(first, max(release - 1, 1))
        arrive = first + 1
        blocked = ~self.relay_ok.copy()
        blocked[src] = blocked[dst] = True
        arrive = np.where(blocked, np.iinfo(np.int64).max, arrive)
        w = int(np.argmin(arrive))
        if arrive[w] < direct:
            r = int(first[w])
            free[src, w] = r + 1
            free[w, dst] = r + 2
            self.schedule.hops.append((r, src, w, idx))
            self.schedule.hops.append((r + 1, w, dst, idx))
            self.schedule.arrival.append(r + 1)
            self.schedule.via.append(w)
            return r + 1
        free[src, dst] = direct + 1
        self.schedule.hops.append((direct, src, dst, idx))
        self.schedule.arrival.append(direct)
        self.schedule.via.append(None)
        return direct


def route_to_targets(messages: Sequence, n: int, mu: Optional[int] = None) -> RoutingSchedule:
    """Greedy two-hop delivery schedule for ``(src, dst, word)`` triples.

    With ``mu`` given, a target receiving more than ``mu`` words is rejected
    with :class:`BatchTooLarge` (callers split larger loads into batches).
    """
    if mu is not None:
        load: dict = {}
        for _, dst, _ in messages:
            load[dst] = load.get(dst, 0) + 1
        for dst, cnt in load.items():
            if cnt > mu:
                raise BatchTooLarge(f"node {dst} would receive {cnt} > mu={mu} words")
    router = TwoHopRouter(n)
    for src, dst, _ in messages:
        if src == dst:
            raise InvalidParams(f"message from node {src} to itself")
        router.place(src, dst)
    return router.schedule


def routing_bound(messages: Sequence, n: int, c0: int = 2) -> int:
    """ceil(max send load / (n-1)) + ceil(max receive load / (n-1)) + c0."""
    if not messages:
        return 0
    send: dict = {}
    recv: dict = {}
    for src, dst, _ in messages:
        send[src] = send.get(src, 0) + 1
        recv[dst] = recv.get(dst, 0) + 1
    links = max(n - 1, 1)
    return -(-max(send.values()) // links) + -(-max(recv.values()) // links) + c0


class _Replay(NodeProgram):
    """Follows a precomputed hop list; a relay holds a word for one round."""

    def __init__(self, sends, incoming, words):
        self.sends = sends  # node -> round -> [(dst, message index)]
        self.incoming = incoming  # (round, receiver, sender) -> (message index, final)
        self.words = words

    def init(self, ctx):
        return {"held": {}, "got": []}

    def send(self, ctx, st):
        out = {}
        for dst, idx in self.sends[ctx.node].get(ctx.round, ()):
            out[dst] = self.words[idx]
            st["held"].pop(idx, None)
        return st, out

    def receive(self, ctx, st, inbox):
        for src, w in inbox:
            idx, final = self.incoming[(ctx.round, ctx.node, src)]
            if final:
                st["got"].append(w)
            else:
                st["held"][idx] = w
        return st, ()

    def size(self, st):
        return len(st["held"]) + len(st["got"])


def deliver(net: Network, messages: Sequence, schedule: RoutingSchedule) -> list:
    """Run ``schedule`` on ``net``; returns per-node lists of received words."""
    if net.topology != "clique":
        raise ModelMismatch("two-hop routing needs the complete communication graph")
    sends: dict = {v: {} for v in range(net.n)}
    incoming = {}
    for r, u, v, idx in schedule.hops:
        sends[u].setdefault(r, []).append((v, idx))
        incoming[(r, v, u)] = (idx, v == messages[idx][1])
    words = [m[2] for m in messages]
    last = schedule.rounds
    prog = _Replay(sends, incoming, words)
    res = net.run(prog, halt=lambda _n, _s, rnd: rnd >= last, name="route")
    return [s["got"] for s in res.states]


# ---------------------------------------------------------------------------
# degree-class relabeling in the all-to-all model


class _ClassOwners(NodeProgram):
    """Node ``c`` numbers the members of degree class ``c`` as their pings arrive.

    Members ping their owner in staggered waves of ``chunk`` senders so the
    owner's inbox and pending replies stay within memory; afterwards every
    owner sends its class size to every node, which then derives its id.
    """

    def __init__(self, classes, x, chunk):
        self.classes = classes
        self.x = x
        self.chunk = chunk
        self.waves = -(-len(classes) // chunk)

    def init(self, ctx):
        v = ctx.node
        return {"cls": self.classes[v], "rank": None, "count": 0, "pending": [], "table": []}

    def _is_owner(self, v):
        return v < self.x

    def send(self, ctx, st):
        # a word is (ping, rank) with rank == n meaning "no reply"
        v, r, n = ctx.node, ctx.round, ctx.n
        out = {}
        if r <= self.waves and v // self.chunk == r - 1:
            owner = st["cls"]
            if owner == v:
                st["rank"] = st["count"]
                st["count"] += 1
            else:
                out[owner] = (1, n)
        for dst, rank in st["pending"]:
            out[dst] = (out.get(dst, (0, n))[0], rank)
        st["pending"] = []
        if r == self.waves + 2 and self._is_owner(v):
            for w in ctx.neighbors:
                out[w] = st["count"]
            st["table_own"] = st["count"]
        return st, out

    def receive(self, ctx, st, inbox):
        v, r, n = ctx.node, ctx.round, ctx.n
        if r <= self.waves + 1:
            for src, (ping, rank) in inbox:
                if rank < n:
                    st["rank"] = rank
                if ping:
                    st["pending"].append((src, st["count"]))
                    st["count"] += 1
        elif r == self.waves + 2:
            table = [0] * self.x
            for src, cnt in inbox:
                table[src] = cnt
            if self._is_owner(v):
                table[v] = st.pop("table_own")
            st["table"] = table
        return st, ()

    def size(self, st):
        # class, rank once known, the owner's counter until the table lands
        words = 1 + len(st["pending"]) + len(st["table"])
        words += st["rank"] is not None
        words += bool(st["count"] or "table_own" in st) and not st["table"]
        return words


def relabel_all_to_all(net: Network, degrees: Sequence[int]):
    """Degree-class relabeling on the complete communication graph.

    Returns the same :class:`Relabeling` shape as the tree-based version, in
    ``O(n / mu)`` rounds (a constant for ``mu >= n``).
    """
    from .trees import Relabeling, class_count, degree_class

    n = net.n
    classes = [degree_class(d) for d in degrees]
    x = class_count(n)
    snap = net.snapshot()
    if n == 1:
        return Relabeling([1], [1] + [0] * (x - 1), None, net.metrics_since(snap))
    chunk = max(1, (net.mu - 4) // 2)
    prog = _ClassOwners(classes, x, chunk)
    res = net.run(prog, halt=lambda _n, _s, rnd: rnd >= prog.waves + 2, name="relabel")
    table = res.states[0]["table"]
    starts = [1 + sum(table[:c]) for c in range(x)]
    new_ids = [starts[st["cls"]] + st["rank"] for st in res.states]
    return Relabeling(new_ids, table, None, net.metrics_since(snap))


# ---------------------------------------------------------------------------
# all-to-all k-clique listing


@dataclass
class ListingAssignment:
    groups: list  # contiguous id ranges
    masters: dict  # sorted k-multiset of group indices -> master node

    def universe(self, combo) -> list:
        return sorted(set(itertools.chain.from_iterable(self.groups[g] for g in combo)))


@dataclass
class ListingResult:
    cliques: set
    metrics: MetricsRecord
    raw_outputs: int
    iterations: int  # most cover sets handled by one master
    assignment: ListingAssignment
    set_size: int
    window: int
    max_batch_words: int = 0

    def __iter__(self):
        yield self.cliques
        yield self.metrics


def group_count(n: int, k: int) -> int:
    """floor(n^(1/k)), lowered until the k-multisets of groups fit on n masters."""
    g = max(1, int(math.floor(n ** (1.0 / k) + 1e-9)))
    while g > 1 and math.comb(g + k - 1, k) > n:
        g -= 1
    return g


def split_contiguous(n: int, parts: int) -> list:
    base, extra = divmod(n, parts)
    out, start = [], 0
    for i in range(parts):
        size = base + (1 if i < extra else 0)
        out.append(list(range(start, start + size)))
        start += size
    return out


def listing_set_size(mu: int, k: int) -> tuple:
    """Per-set vertex count ``b`` (a multiple of k) and how many sets fit at once.

    ``b`` is the largest value with two sets' worth of edges, 2*C(b,2), within
    ``mu``; rounding down to a multiple of k gives blocks of ``b/k`` vertices.
    """
    b = 2
    while (b + 1) * b <= mu:
        b += 1
    block = max(1, b // k)
    b = block * k
    pair_words = math.comb(b, 2)
    if pair_words > mu:
        raise InvalidParams(f"mu={mu} cannot hold the {pair_words} edges of one {b}-vertex set")
    return b, max(1, mu // pair_words)


class _ListingNode(_Replay):
    """Relays per the schedule; masters collect set edges and list cliques."""

    def __init__(self, sends, incoming, words, graph, k, owner_sets, set_of, completes):
        super().__init__(sends, incoming, words)
        self.graph = graph
        self.k = k
        self.owner_sets = owner_sets  # master -> list of vertex sets
        self.set_of = set_of  # message index -> set index at its master
        self.completes = completes  # master -> round -> [set index]

    def init(self, ctx):
        return {"held": {}, "buf": {}}

    def receive(self, ctx, st, inbox):
        v = ctx.node
        for src, w in inbox:
            idx, final = self.incoming[(ctx.round, v, src)]
            if final:
                st["buf"].setdefault(self.set_of[idx], []).append(w)
            else:
                st["held"][idx] = w
        found = []
        for j in self.completes.get(v, {}).get(ctx.round, ()):
            edges = st["buf"].pop(j, [])
            found.extend(self._cliques(v, self.owner_sets[v][j], edges))
        return st, found

    def _cliques(self, v, vertices, edges):
        present = set(edges)
        for w in self.graph.adj[v]:
            if w > v:
                present.add((v, w))
        out = []
        for combo in itertools.combinations(vertices, self.k):
            if all(p in present for p in itertools.combinations(combo, 2)):
                out.append(combo)
        return out

    def size(self, st):
        return len(st["held"]) + sum(len(b) for b in st["buf"].values())


def list_kcliques_all_to_all(
    graph: Graph,
    k: int,
    mu: int,
    seed: int = 0,
    net: Optional[Network] = None,
) -> ListingResult:
    """List every k-clique of ``graph`` on the complete communication graph.

    Vertices are split into ``g`` contiguous groups and each k-multiset of
    groups gets a master, chosen by rank of the degree-class relabeling.  A
    master covers its vertex universe with a subset cover whose sets have
    ``b ~ sqrt(mu)`` vertices and handles the sets in order, holding at most
    ``window`` sets' edges at a time.  Each edge travels from its lower-id
    endpoint to the master, directly or through one relay.
    """
    n = graph.n
    if k < 3:
        raise InvalidParams("k must be at least 3")
    if mu < n:
        raise InvalidParams(f"all-to-all listing needs mu >= n (mu={mu}, n={n})")
    if net is None:
        net = Network(graph, mu, seed, topology="clique")
    elif net.topology != "clique":
        raise ModelMismatch("all-to-all listing needs the complete communication graph")
    snap = net.snapshot()
    relabel = relabel_all_to_all(net, [graph.degree(v) for v in range(n)])
    by_rank = sorted(range(n), key=lambda v: relabel.new_ids[v])

    g = group_count(n, k)
    groups = split_contiguous(n, g)
    combos = list(itertools.combinations_with_replacement(range(g), k))
    masters = {combo: by_rank[i] for i, combo in enumerate(combos)}
    assignment = ListingAssignment(groups, masters)

    b, window = listing_set_size(mu, k)
    owner_sets: dict = {}
    for combo, m in masters.items():
        universe = assignment.universe(combo)
        if len(universe) <= b:
            owner_sets[m] = [universe]
        else:
            cover = build_subset_cover(len(universe), b, k)
            owner_sets[m] = [[universe[i - 1] for i in s] for s in cover.sets]

    relay_ok = [True] * n
    for m in masters.values():
        relay_ok[m] = False
    router = TwoHopRouter(n, relay_ok)
    words: list = []
    set_of: list = []
    msg_dst: list = []
    completes: dict = {m: {} for m in owner_sets}
    # per master: words and completion round of each set, plus the first set
    # that may still be resident
    hist = {m: ([], [], [0, 0]) for m in owner_sets}
    max_batch = 0
    max_live = 1
    longest = max(len(s) for s in owner_sets.values())
    for j in range(longest):
        for combo in combos:
            m = masters[combo]
            sets = owner_sets[m]
            if j >= len(sets):
                continue
            sizes, done, live = hist[m]
            pairs = [
                (u, w)
                for u, w in itertools.combinations(sets[j], 2)
                if u != m and graph.has_edge(u, w)
            ]
            count = len(pairs)
            if count > mu:
                raise BatchTooLarge(f"set {j} of master {m} has {count} > mu={mu} edges")
            # admit set j once the sets still held leave room for it
            while live[1] + count > mu:
                live[1] -= sizes[live[0]]
                live[0] += 1
            release = done[live[0] - 1] + 1 if live[0] > 0 else 1
            last = done[-1] if done else 0
            for u, w in pairs:
                last = max(last, router.place(u, m, release))
                words.append((u, w))
                set_of.append(j)
                msg_dst.append(m)
            sizes.append(count)
            done.append(last)
            live[1] += count
            max_batch = max(max_batch, count)
            max_live = max(max_live, len(sizes) - live[0])
            if count:
                completes[m].setdefault(last, []).append(j)
    window = max_live

    schedule = router.schedule
    sends: dict = {v: {} for v in range(n)}
    incoming = {}
    for r, u, v, idx in schedule.hops:
        sends[u].setdefault(r, []).append((v, idx))
        incoming[(r, v, u)] = (idx, v == msg_dst[idx])
    last_round = schedule.rounds
    prog = _ListingNode(sends, incoming, words, graph, k, owner_sets, set_of, completes)
    res = net.run(prog, halt=lambda _n, _s, rnd: rnd >= last_round, name="listing")
    cliques = {tuple(sorted(c)) for _, c in res.outputs}
    iterations = max(len(s) for s in owner_sets.values())
    return ListingResult(
        cliques,
        net.metrics_since(snap),
        len(res.outputs),
        iterations,
        assignment,
        b,
        window,
        max_batch,
    )


# ---------------------------------------------------------------------------
# plain-network building blocks


class LocalTriangles(NodeProgram):
    """Each active node asks its neighbors, one neighbor id per round, "are
    you adjacent to q?" and emits the triangles confirmed by the replies.

    In round ``t`` a node sends every neighbor the word ``(q_t, bit)``: its
    own t-th query (``n`` once it has run out or is inactive) and the answer
    to the query that neighbor sent in round ``t-1``.  Only edges incident to
    the querying node are used, and all nodes may run at once.
    """

    def __init__(self, graph: Graph, active: Optional[set] = None):
        self.graph = graph
        self.active = active

    def _is_active(self, v):
        return self.active is None or v in self.active

    def init(self, ctx):
        return {"answers": {}}

    def send(self, ctx, st):
        v, t, n = ctx.node, ctx.round, ctx.n
        nbrs = self.graph.adj[v]
        query = nbrs[t - 1] if self._is_active(v) and t <= len(nbrs) else n
        answers = st["answers"]
        st["answers"] = {}
        return st, {u: (query, answers.get(u, 0)) for u in nbrs}

    def receive(self, ctx, st, inbox):
        v, t, n = ctx.node, ctx.round, ctx.n
        nbrs = self.graph.adj[v]
        asked = nbrs[t - 2] if self._is_active(v) and 2 <= t <= len(nbrs) + 1 else None
        found = []
        for u, (q, bit) in inbox:
            if q < n:
                st["answers"][u] = int(self.graph.has_edge(v, q))
            if asked is not None and bit and u < asked:
                found.append(tuple(sorted((v, u, asked))))
        return st, found

    def size(self, st):
        return 1 + len(st["answers"])


@dataclass
class TriangleListing:
    triangles: set
    per_node: dict
    metrics: MetricsRecord


def list_local_triangles(
    graph: Graph,
    nodes: Optional[Iterable[int]] = None,
    mu: Optional[int] = None,
    seed: int = 0,
    net: Optional[Network] = None,
) -> TriangleListing:
    """Every node in ``nodes`` (default: all) emits the triangles it lies on.

    Takes ``max deg + 1`` rounds: ``deg(v)`` query rounds plus one round for
    the last replies.
    """
    active = set(range(graph.n)) if nodes is None else set(nodes)
    if net is None:
        net = Network(graph, mu if mu is not None else max(graph.max_degree, 1) * 2 + 2, seed)
    snap = net.snapshot()
    last = max((graph.degree(v) for v in active), default=0)
    last = last + 1 if last else 0
    res = net.run(LocalTriangles(graph, active), halt=lambda _n, _s, r: r >= last, name="local-triangles")
    per_node: dict = {v: set() for v in active}
    for v, tri in res.outputs:
        per_node[v].add(tri)
    triangles = set().union(*per_node.values()) if per_node else set()
    return TriangleListing(triangles, per_node, net.metrics_since(snap))


@dataclass
class PruneResult:
    removed: set
    triangles: set
    gamma: float
    threshold: float
    metrics: MetricsRecord
    n: int

    @property
    def remaining(self) -> int:
        return self.n - len(self.removed)


def prune_low_degree(
    graph: Graph,
    c: float = 2.0,
    mu: Optional[int] = None,
    seed: int = 0,
    net: Optional[Network] = None,
) -> PruneResult:
    """Nodes of degree at most ``c * gamma`` list their triangles and leave.

    ``gamma = 2m/n`` is learned by aggregating degree sums and node counts up
    a BFS tree and broadcasting the two totals.  Fewer than ``n/c`` nodes can
    exceed the threshold, since their degrees alone would sum past ``n*gamma``.
    """
    if c <= 1:
        raise InvalidParams("c must exceed 1")
    n = graph.n
    if net is None:
        net = Network(graph, mu if mu is not None else max(graph.max_degree, 1) * 2 + 8, seed)
    snap = net.snapshot()
    agg = aggregate_up_tree(graph, 0, [[graph.degree(v), 1] for v in range(n)], net=net)
    degree_sum, count = agg.aggregates[agg.tree.root]
    broadcast(net, agg.tree, [degree_sum, count])
    gamma = degree_sum / count
    threshold = c * gamma
    low = {v for v in range(n) if graph.degree(v) <= threshold}
    listing = list_local_triangles(graph, low, net=net)
    return PruneResult(low, listing.triangles, gamma, threshold, net.metrics_since(snap), n)


@dataclass
class ClusterFilterResult:
    low_clusters: list  # indices of clusters with average degree below gamma / c
    e_low: set
    premise_holds: bool
    bound_holds: Optional[bool]
    gamma: float
    intra_edges: int


def low_avg_degree_cluster_filter(
    graph: Graph,
    clusters: Sequence[Iterable[int]],
    c: float,
    d: float,
    strict: bool = True,
) -> ClusterFilterResult:
    """Edges inside clusters whose own average degree ``2|E_i|/|V_i|`` is below
    ``gamma/c``, with a check of ``|E_low| <= d*m/c``.

    The check presumes the clusters keep at least ``m/d`` edges inside them;
    when they do not, :class:`PremiseViolated` is raised (``strict``) or the
    check is skipped and reported as ``None``.
    """
    n, m = graph.n, graph.m
    gamma = 2 * m / n if n else 0.0
    where = {}
    cluster_sets = [set(cl) for cl in clusters]
    for i, cl in enumerate(cluster_sets):
        for v in cl:
            where[v] = i
    inside = [[] for _ in cluster_sets]
    for u, v in graph.edges:
        if u in where and where[u] == where.get(v):
            inside[where[u]].append((u, v))
    intra = sum(len(e) for e in inside)
    premise = intra * d >= m
    low = [
        i
        for i, cl in enumerate(cluster_sets)
        if cl and 2 * len(inside[i]) / len(cl) < gamma / c
    ]
    e_low = set().union(*(inside[i] for i in low)) if low else set()
    if not premise:
        if strict:
            raise PremiseViolated(f"clusters keep {intra} of {m} edges, fewer than m/d")
        return ClusterFilterResult(low, e_low, False, None, gamma, intra)
    return ClusterFilterResult(low, e_low, True, len(e_low) * c <= d * m, gamma, intra)
