"""Uniformly random stream order generated inside the network.

Every neighbor of the simulator holds a bucket of exactly ``n`` items
(padded with tagged dummies).  The simulator runs the bucketized
Fisher-Yates index process to get the transfer matrix ``B``: ``B[i][j]`` is
how many items move from bucket ``j`` to bucket ``i``.  Each neighbor splits
a random permutation of its bucket into chunks of the sizes in its column,
and the chunks travel through the simulator along a Birkhoff decomposition
of ``B`` into permutations, one item per neighbor per step.  Destinations
put what they received in random order, and during replay the simulator
also shuffles the items arriving in the same round.

Draws happen in a fixed order so that a sequential oracle can repeat them:
bucket draws from the simulator's ``buckets`` stream, each neighbor's split
from its node stream, then each destination's reordering from its node
stream, and per-round shuffles from the simulator's ``round-shuffle``
stream (restarted every pass, so every pass sees the same order).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .engine import MetricsRecord, Network, NodeProgram, alg_rng, node_rng
from .errors import InsufficientMemory, InvalidParams, MemoryExceeded, NotDoublyBalanced
from .graphs import Graph
from .streaming import StreamAlgorithm, StreamRun, _StreamPass, plan_stream, simulator_node
from .trees import TREE_WORDS


@dataclass
class TransferMatrix:
    B: list  # B[i][j]: items from bucket j to bucket i
    n: int

    @property
    def delta(self) -> int:
        return len(self.B)

    def row_sums(self) -> list:
        return [sum(row) for row in self.B]

    def col_sums(self) -> list:
        return [sum(self.B[i][j] for i in range(self.delta)) for j in range(self.delta)]

    def column(self, j: int) -> list:
        return [self.B[i][j] for i in range(self.delta)]


@dataclass
class MatchingSchedule:
    """``perms[t][j]`` is the bucket that source ``j`` feeds in step ``t``."""

    perms: list

    def matrices(self, delta: int) -> list:
        out = []
        for perm in self.perms:
            P = [[0] * delta for _ in range(delta)]
            for j, i in enumerate(perm):
                P[i][j] = 1
            out.append(P)
        return out


def bucket_draws(n: int, delta: int, rng: random.Random) -> list:
    """Source bucket of each of the ``n*delta`` slots, drawn in slot order.

    Slot ``i`` takes bucket ``k`` with probability (items left in ``k``) /
    (slots left), via one ``randrange`` over the remaining items.
    """
    left = [n] * delta
    labels = []
    remaining = n * delta
    for _ in range(n * delta):
        r = rng.randrange(remaining)
        k = 0
        while r >= left[k]:
            r -= left[k]
            k += 1
        labels.append(k)
        left[k] -= 1
        remaining -= 1
    return labels


def build_transfer_matrix(slots: int, delta: int, rng: random.Random) -> TransferMatrix:
    """Transfer matrix of the bucketized index process over ``slots = n*delta``."""
    if delta < 1 or slots % delta:
        raise InvalidParams(f"{slots} slots do not split into {delta} buckets")
    n = slots // delta
    B = [[0] * delta for _ in range(delta)]
    for i, k in enumerate(bucket_draws(n, delta, rng)):
        B[i // n][k] += 1
    return TransferMatrix(B, n)


def check_balanced(B: Sequence[Sequence[int]]) -> int:
    delta = len(B)
    rows = [sum(r) for r in B]
    cols = [sum(B[i][j] for i in range(delta)) for j in range(delta)]
    if any(len(r) != delta for r in B) or len(set(rows + cols)) > 1:
        raise NotDoublyBalanced(f"row sums {rows}, column sums {cols}")
    if any(x < 0 for r in B for x in r):
        raise NotDoublyBalanced("negative entry")
    return rows[0] if rows else 0


def _augment(j, B, match_of_row, seen) -> bool:
    for i in range(len(B)):
        if B[i][j] > 0 and not seen[i]:
            seen[i] = True
            if match_of_row[i] is None or _augment(match_of_row[i], B, match_of_row, seen):
                match_of_row[i] = j
                return True
    return False


def perfect_matching(B, previous: Optional[list] = None) -> list:
    """Perfect matching in the support of ``B`` by augmenting paths.

    Pairs of ``previous`` (as source -> bucket) that still have support are
    kept and only the rest is repaired.
    """
    delta = len(B)
    match_of_row: list = [None] * delta
    if previous is not None:
        for j, i in enumerate(previous):
            if B[i][j] > 0:
                match_of_row[i] = j
    matched = {j for j in match_of_row if j is not None}
    for j in range(delta):
        if j in matched:
            continue
        if not _augment(j, B, match_of_row, [False] * delta):
            raise NotDoublyBalanced("support has no perfect matching")
    perm = [0] * delta
    for i, j in enumerate(match_of_row):
        perm[j] = i
    return perm


def birkhoff_schedule(B) -> MatchingSchedule:
    """Split a matrix with all line sums ``n`` into ``n`` permutations."""
    if isinstance(B, TransferMatrix):
        B = B.B
    n = check_balanced(B)
    work = [list(r) for r in B]
    perms = []
    perm = None
    for _ in range(n):
        perm = perfect_matching(work, perm)
        for j, i in enumerate(perm):
            work[i][j] -= 1
        perms.append(perm)
    return MatchingSchedule(perms)


# ---------------------------------------------------------------------------
# item encoding


def dummy(k: int, holder: int) -> tuple:
    """The k-th padding item at ``holder``; negative first field marks it."""
    return (-(k + 1), holder)


def is_dummy(item) -> bool:
    return isinstance(item, tuple) and item[0] < 0


def canonical(items) -> list:
    return sorted(items, key=lambda x: (is_dummy(x), x))


def pad_buckets(items: Sequence, holders: Sequence[int], n: int) -> list:
    """Deal ``items`` round-robin to ``holders`` and pad each bucket to ``n``."""
    delta = len(holders)
    if len(items) > n * delta:
        raise InvalidParams(f"{len(items)} items exceed {delta} buckets of {n}")
    buckets = [[] for _ in range(delta)]
    for j, item in enumerate(items):
        buckets[j % delta].append(item)
    for ell, b in enumerate(buckets):
        k = 0
        while len(b) < n:
            b.append(dummy(k, holders[ell]))
            k += 1
    return buckets


# ---------------------------------------------------------------------------
# sequential oracle


@dataclass
class ShuffleOutcome:
    buckets: list  # final bucket per neighbor index, in replay order
    stream: list  # real items in the order the simulator feeds them
    matrix: TransferMatrix
    schedule: Optional[MatchingSchedule] = None
    metrics: Optional[MetricsRecord] = None
    slots: Optional[list] = None  # every item, dummies included, in stream order


def replay_order(buckets: Sequence[Sequence], seed: int) -> list:
    """Stream order of a replay pass: round t takes the t-th item of every
    bucket and shuffles them with the per-round stream."""
    rng = alg_rng(seed, "round-shuffle")
    out = []
    rounds = max((len(b) for b in buckets), default=0)
    for t in range(rounds):
        group = [b[t] for b in buckets if t < len(b)]
        rng.shuffle(group)
        out.extend(group)
    return out


def sequential_shuffle(buckets: Sequence[Sequence], holders: Sequence[int], seed: int) -> ShuffleOutcome:
    """The same draws as :func:`distributed_shuffle`, made in one place."""
    delta = len(buckets)
    n = len(buckets[0]) if delta else 0
    tm = build_transfer_matrix(n * delta, delta, alg_rng(seed, "buckets"))
    rngs = [node_rng(seed, h) for h in holders]
    received = [[] for _ in range(delta)]
    for ell in range(delta):
        mine = list(buckets[ell])
        rngs[ell].shuffle(mine)
        pos = 0
        for d in range(delta):
            take = tm.B[d][ell]
            received[d].extend(mine[pos : pos + take])
            pos += take
    final = []
    for d in range(delta):
        b = canonical(received[d])
        rngs[d].shuffle(b)
        final.append(b)
    slots = replay_order(final, seed)
    return ShuffleOutcome(final, [x for x in slots if not is_dummy(x)], tm, slots=slots)


# ---------------------------------------------------------------------------
# distributed protocol


class _ShuffleNode(NodeProgram):
    """Timeline for ``delta`` neighbors and buckets of ``n``:

    * rounds ``1..delta``: the simulator sends column ``ell`` of ``B`` to
      neighbor ``ell``, one entry per round;
    * round ``delta+1``: it sends every neighbor its first destination;
    * round ``delta+1+t`` (t = 1..n): each neighbor sends one item for its
      step-t destination, while the simulator forwards the step t-1 items,
      each packed with the receiver's destination for step t+1.
    """

    def __init__(self, s, nbrs, n, matrix: TransferMatrix):
        self.s = s
        self.nbrs = nbrs
        self.index = {w: i for i, w in enumerate(nbrs)}
        self.n = n
        self.delta = len(nbrs)
        self.matrix = matrix
        self.none = self.delta  # "no destination"

    def init(self, ctx):
        return {}

    # simulator -------------------------------------------------------------
    def _next_perm(self, st):
        if st["steps"] >= self.n:
            return None
        st["perm"] = perfect_matching(st["B"], st.get("perm"))
        for j, i in enumerate(st["perm"]):
            st["B"][i][j] -= 1
        st["steps"] += 1
        st["perms"].append(list(st["perm"]))
        return st["perm"]

    def _sim_send(self, ctx, st):
        r, delta = ctx.round, self.delta
        out = {}
        if r <= delta:
            for ell, w in enumerate(self.nbrs):
                out[w] = st["B"][r - 1][ell]
            return st, out
        if r == delta + 1:
            st["upcoming"] = self._next_perm(st)
            for ell, w in enumerate(self.nbrs):
                out[w] = (st["upcoming"][ell],)
            return st, out
        current = st["upcoming"]
        upcoming = self._next_perm(st) if current is not None else None
        st["current"], st["upcoming"] = current, upcoming
        arrivals = st["arrivals"]
        st["arrivals"] = {}
        for d, w in enumerate(self.nbrs):
            instr = upcoming[d] if upcoming is not None else self.none
            item = arrivals.get(d)
            out[w] = (instr,) if item is None else (instr, item)
        return st, out

    def _sim_receive(self, ctx, st, inbox):
        # items arriving now follow the permutation that was current at send time
        for src, item in inbox:
            st["arrivals"][st["current"][self.index[src]]] = item
        return st, ()

    # neighbors -------------------------------------------------------------
    def _nbr_send(self, ctx, st):
        if st["dest"] is None:
            return st, ()
        d = st["dest"]
        st["dest"] = None
        return st, {self.s: st["chunks"][d].pop()}

    def _nbr_receive(self, ctx, st, inbox):
        r = ctx.round
        for _, word in inbox:
            if r <= self.delta:
                st["col"].append(word)
                if len(st["col"]) == self.delta:
                    mine = list(st["bucket"])
                    ctx.rng.shuffle(mine)
                    chunks, pos = [], 0
                    for take in st["col"]:
                        # popped from the end, so store each chunk reversed
                        chunks.append(list(reversed(mine[pos : pos + take])))
                        pos += take
                    st["chunks"], st["col"], st["bucket"] = chunks, [], []
                continue
            if word[0] != self.none:
                st["dest"] = word[0]
            if len(word) > 1:
                st["got"].append(word[1])
        if r == self.delta + 2 + self.n:
            final = canonical(st["got"])
            ctx.rng.shuffle(final)
            st["got"] = final
        return st, ()

    def send(self, ctx, st):
        if ctx.node == self.s:
            return self._sim_send(ctx, st)
        if "bucket" in st:
            return self._nbr_send(ctx, st)
        return st, ()

    def receive(self, ctx, st, inbox):
        if ctx.node == self.s:
            return self._sim_receive(ctx, st, inbox)
        if "bucket" in st:
            return self._nbr_receive(ctx, st, inbox)
        return st, ()

    def size(self, st):
        if "B" in st:
            words = sum(len(r) for r in st["B"]) + len(st["arrivals"]) + 2
            for key in ("upcoming", "current"):
                if st.get(key) is not None:
                    words += self.delta
            return TREE_WORDS + words
        if "bucket" in st:
            chunks = sum(len(c) for c in st.get("chunks", ()))
            return TREE_WORDS + len(st["bucket"]) + len(st["col"]) + chunks + len(st["got"]) + 1
        return 0


def shuffle_memory(n: int, delta: int) -> int:
    """Simulator words the shuffle needs: ``B``, two permutations, the items
    it is forwarding and a counter."""
    return delta * delta + 3 * delta + TREE_WORDS + 2


def neighbor_memory(n: int, delta: int) -> int:
    """Neighbor words: its bucket, the column of ``B`` arriving one entry per
    round, one inbox word and the destination slot."""
    return n + delta + TREE_WORDS + 1


def distributed_shuffle(
    graph: Graph,
    mu: int,
    seed: int = 0,
    items: Optional[Sequence] = None,
    bucket_size: Optional[int] = None,
    net: Optional[Network] = None,
    buckets: Optional[Sequence[Sequence]] = None,
) -> ShuffleOutcome:
    """Randomly permute the items cached at the simulator's neighbors.

    ``items`` (default: the edges of ``graph``) are dealt round-robin to the
    neighbors and padded to ``bucket_size`` (default ``n``) per neighbor;
    pass ``buckets`` to supply the cached buckets directly.
    """
    s = simulator_node(graph)
    nbrs = graph.adj[s]
    delta = len(nbrs)
    n = graph.n if bucket_size is None else bucket_size
    if buckets is None:
        buckets = pad_buckets(list(graph.edges if items is None else items), nbrs, n)
    need = max(n + delta * delta, shuffle_memory(n, delta), neighbor_memory(n, delta))
    if mu < need:
        raise InsufficientMemory(f"shuffle with n={n}, delta={delta} needs mu >= {need}, got {mu}")
    if net is None:
        net = Network(graph, mu, seed)
    snap = net.snapshot()
    matrix = build_transfer_matrix(n * delta, delta, alg_rng(seed, "buckets"))
    prog = _ShuffleNode(s, nbrs, n, matrix)
    states = []
    for v in range(graph.n):
        if v == s:
            st = {
                "B": [list(r) for r in matrix.B],
                "steps": 0,
                "perms": [],
                "arrivals": {},
                "upcoming": None,
                "current": None,
            }
        elif v in prog.index:
            st = {"bucket": list(buckets[prog.index[v]]), "col": [], "dest": None, "got": []}
        else:
            st = {}
        states.append(st)
    last = delta + 2 + n
    res = net.run(prog, states=states, halt=lambda _n, _s, r: r >= last, name="shuffle")
    final = [res.states[w]["got"] for w in nbrs]
    slots = replay_order(final, seed)
    schedule = MatchingSchedule(res.states[s]["perms"])
    return ShuffleOutcome(
        final,
        [x for x in slots if not is_dummy(x)],
        matrix,
        schedule,
        net.metrics_since(snap),
        slots,
    )


# ---------------------------------------------------------------------------
# random-order multi-pass simulation


class _Sink(StreamAlgorithm):
    """Placeholder used while edges are only being parked at the neighbors."""

    def __init__(self):
        super().__init__(0, 1)


class _RandomReplay(NodeProgram):
    def __init__(self, s, nbrs, alg, seed, log):
        self.s = s
        self.nbrs = nbrs
        self.alg = alg
        self.seed = seed
        self.log = log

    def send(self, ctx, st):
        if ctx.node == self.s or "got" not in st:
            return st, ()
        t = ctx.round - 1
        return st, ({self.s: st["got"][t]} if t < len(st["got"]) else ())

    def receive(self, ctx, st, inbox):
        if ctx.node != self.s:
            return st, ()
        group = [item for _, item in sorted(inbox)]
        st["rng"].shuffle(group)
        emitted: list = []
        self.alg.emit = emitted.append
        for item in group:
            if is_dummy(item):
                continue
            st["alg"] = self.alg.process(st["alg"], item)
            used = self.alg.size(st["alg"])
            if used > self.alg.M:
                raise MemoryExceeded(ctx.node, ctx.round, used, self.alg.M)
            self.log.append(item)
        return st, emitted

    def size(self, st):
        if "alg" in st:
            return TREE_WORDS + 2 + self.alg.size(st["alg"])
        return TREE_WORDS + 1 + len(st.get("got", ()))


@dataclass
class RandomOrderRun(StreamRun):
    shuffle: Optional[ShuffleOutcome] = None


def random_order_p_pass(graph: Graph, alg: StreamAlgorithm, mu: int, seed: int = 0) -> RandomOrderRun:
    """Park the edges at the simulator's neighbors, shuffle them into a
    uniformly random order, then replay that order for every pass."""
    s = simulator_node(graph)
    nbrs = graph.adj[s]
    delta, n = len(nbrs), graph.n
    need = max(alg.M + n + delta * delta, shuffle_memory(n, delta), neighbor_memory(n, delta))
    if mu < need:
        raise InsufficientMemory(f"random-order simulation needs mu >= {need}, got {mu}")
    net = Network(graph, mu, seed)
    plan = plan_stream(net, graph, s)
    setup = net.metrics.rounds_total
    states = [{"held": None} for _ in range(n)]
    states[s] = {"alg": None, "fanout": [], "j": 0}
    for w in nbrs:
        states[w]["cache"] = []
    sink = _Sink()
    sink.init = lambda: None
    sink.size = lambda st: 0
    park = _StreamPass(graph, plan, sink, True, [])
    last = plan.stream_length + plan.height + 2
    res = net.run(park, states=states, halt=lambda _n, _s, r: r >= last, name="park")
    buckets = []
    for w in nbrs:
        cache = res.states[w]["cache"]
        buckets.append(cache + [dummy(k, w) for k in range(n - len(cache))])
    outcome = distributed_shuffle(graph, mu, seed, buckets=buckets, net=net)
    states = [{} for _ in range(n)]
    for w, bucket in zip(nbrs, outcome.buckets):
        states[w] = {"got": bucket}
    state = alg.init()
    pass_items, pass_rounds, outputs = [], [], []
    index, more = 0, True
    while more:
        states[s] = {"alg": state, "rng": alg_rng(seed, "round-shuffle")}
        log: list = []
        prog = _RandomReplay(s, nbrs, alg, seed, log)
        res = net.run(prog, states=states, halt=lambda _n, _s, r: r >= n, name=f"pass-{index}")
        states = res.states
        outputs.extend(item for _, item in res.outputs)
        state, more = alg.end_pass(states[s]["alg"], index)
        pass_items.append(log)
        pass_rounds.append(res.metrics.rounds_total)
        index += 1
    return RandomOrderRun(
        alg.result(state),
        net.metrics,
        s,
        pass_items,
        pass_rounds,
        setup,
        outputs,
        outcome,
    )
