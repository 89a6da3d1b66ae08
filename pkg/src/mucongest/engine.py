"""Deterministic synchronous round engine for bounded-memory message passing.

A round has two halves.  First every node's ``send`` hook produces at most one
word per incident directed edge; then all words are delivered and every node's
``receive`` hook consumes its inbox, updates its state and may emit outputs.
Emitted outputs leave the node immediately and never count as memory.

Memory is measured in words.  A node's persistent state is charged after each
half of the round, and while a node is receiving, its inbox is charged on top
of the state it had before the round.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

from .errors import (
    BandwidthViolation,
    InvalidParams,
    MemoryExceeded,
    NonTermination,
    WordTooLarge,
)
from .graphs import Graph

WORD_FACTOR = 4
DEFAULT_ROUND_CAP = 1_000_000


def word_bits(n: int) -> int:
    """Bits available in one word for a network of ``n`` nodes."""
    return WORD_FACTOR * max(1, math.ceil(math.log2(max(n, 2))))


def payload_bits(payload) -> int:
    if payload is None:
        return 0
    if isinstance(payload, (bool, int)):
        x = int(payload)
        return max(1, abs(x).bit_length()) + (1 if x < 0 else 0)
    if isinstance(payload, tuple):
        return sum(payload_bits(p) for p in payload)
    raise WordTooLarge(f"payload {payload!r} is not an int or a tuple of ints")


def check_word(payload, limit: int) -> None:
    bits = payload_bits(payload)
    if bits > limit:
        raise WordTooLarge(f"payload {payload!r} needs {bits} bits, word holds {limit}")


def words_of(obj) -> int:
    """Default word count of a piece of node state.

    Integers and packed tuples are one word each, ``None`` is free, and
    containers cost the sum of their elements.  Integer dict keys are charged;
    string keys are field names and cost nothing.
    """
    if obj is None:
        return 0
    if isinstance(obj, (bool, int, float, tuple)):
        return 1
    if isinstance(obj, dict):
        return sum((0 if isinstance(k, str) else words_of(k)) + words_of(v) for k, v in obj.items())
    if isinstance(obj, (list, set, frozenset)):
        return sum(words_of(x) for x in obj)
    if hasattr(obj, "word_count"):
        return obj.word_count()
    raise TypeError(f"cannot size state component of type {type(obj).__name__}")


def _stable(seed, *parts) -> str:
    return "/".join(str(p) for p in (seed,) + parts)


def node_rng(seed: int, v: int) -> random.Random:
    """Per-node randomness stream derived from the root seed."""
    return random.Random(_stable(seed, "node", v))


def alg_rng(seed: int, tag: str) -> random.Random:
    """Algorithm-level randomness stream derived from the root seed."""
    return random.Random(_stable(seed, "alg", tag))


@dataclass
class MetricsRecord:
    n: int
    rounds_total: int = 0
    words_sent_total: int = 0
    outputs_emitted: int = 0
    max_words_per_node: list = field(default_factory=list)

    def __post_init__(self):
        if not self.max_words_per_node:
            self.max_words_per_node = [0] * self.n

    @property
    def max_words_resident(self) -> int:
        return max(self.max_words_per_node, default=0)

    def absorb(self, other: "MetricsRecord") -> None:
        """Append ``other`` as a later phase of the same execution."""
        self.rounds_total += other.rounds_total
        self.words_sent_total += other.words_sent_total
        self.outputs_emitted += other.outputs_emitted
        self.max_words_per_node = [
            max(a, b) for a, b in zip(self.max_words_per_node, other.max_words_per_node)
        ]

    def as_dict(self) -> dict:
        return {
            "rounds": self.rounds_total,
            "max_words": self.max_words_resident,
            "words_sent": self.words_sent_total,
            "outputs": self.outputs_emitted,
        }


@dataclass
class NodeContext:
    """What a node can see about itself and the network."""

    node: int
    n: int
    mu: int
    neighbors: Sequence[int]
    rng: random.Random
    round: int = 0


class NodeProgram:
    """Per-node state machine.

    Subclasses override the hooks they need.  ``send`` returns the (possibly
    updated) state and an outgoing mapping ``neighbor -> payload`` or a list
    of ``(neighbor, payload)`` pairs.  ``receive`` returns the new state and
    an iterable of emitted outputs.
    """

    def init(self, ctx: NodeContext):
        return {}

    def send(self, ctx: NodeContext, state):
        return state, ()

    def receive(self, ctx: NodeContext, state, inbox: list):
        return state, ()

    def size(self, state) -> int:
        return words_of(state)

    def done(self, ctx: NodeContext, state) -> bool:
        return True


Programs = Union[NodeProgram, Mapping[int, NodeProgram], Sequence[NodeProgram]]


@dataclass
class RunResult:
    outputs: list
    metrics: MetricsRecord
    states: list

    def __iter__(self):
        yield self.outputs
        yield self.metrics


class Network:
    """Holds a topology, a memory budget and the accumulated cost of phases.

    Several protocols run as consecutive phases on the same ``Network``; the
    final states of one phase can be fed as the initial states of the next,
    and metrics accumulate across phases.

    ``topology="clique"`` makes every pair of nodes adjacent for communication
    regardless of ``graph`` (the all-to-all model).  ``sub_degree=True``
    permits ``mu`` below the maximum degree; inboxes are then delivered in a
    seeded random order instead of by sender id.
    """

    def __init__(
        self,
        graph: Graph,
        mu: int,
        seed: int = 0,
        *,
        topology: str = "graph",
        sub_degree: bool = False,
        round_cap: int = DEFAULT_ROUND_CAP,
        charge_adjacency: bool = False,
    ):
        if mu < 1:
            raise ValueError("mu must be at least 1")
        if topology not in ("graph", "clique"):
            raise ValueError(f"unknown topology {topology!r}")
        self.graph = graph
        self.n = graph.n
        self.mu = mu
        self.seed = seed
        self.topology = topology
        self.sub_degree = sub_degree
        self.round_cap = round_cap
        self.charge_adjacency = charge_adjacency
        self.word_limit = word_bits(self.n)
        if topology == "clique":
            everyone = list(range(self.n))
            self.comm = [[u for u in everyone if u != v] for v in range(self.n)]
        else:
            self.comm = graph.adj
        self._comm_sets = [frozenset(c) for c in self.comm]
        max_deg = max((len(c) for c in self.comm), default=0)
        if mu < max_deg and not sub_degree and topology == "graph":
            raise InvalidParams(
                f"mu={mu} is below the maximum degree {max_deg}; pass sub_degree=True"
            )
        self.rngs = [node_rng(seed, v) for v in range(self.n)]
        self._inbox_rng = alg_rng(seed, "inbox-order")
        self.metrics = MetricsRecord(self.n)
        self.outputs: list = []
        self.phase_log: list = []

    def adjacency_words(self, v: int) -> int:
        return len(self.comm[v]) if self.charge_adjacency else 0

    def is_link(self, u: int, v: int) -> bool:
        return v in self._comm_sets[u]

    def _programs(self, programs: Programs) -> list:
        if isinstance(programs, NodeProgram):
            return [programs] * self.n
        if isinstance(programs, Mapping):
            return [programs[v] for v in range(self.n)]
        progs = list(programs)
        if len(progs) != self.n:
            raise ValueError("need one program per node")
        return progs

    def _charge(self, v: int, words: int, rnd: int, metrics: MetricsRecord) -> None:
        words += self.adjacency_words(v)
        if words > self.mu:
            raise MemoryExceeded(v, rnd, words, self.mu)
        if words > metrics.max_words_per_node[v]:
            metrics.max_words_per_node[v] = words

    def _outgoing(self, v: int, out, rnd: int) -> list:
        if not out:
            return []
        pairs = out.items() if isinstance(out, Mapping) else out
        seen = set()
        result = []
        for dst, payload in pairs:
            if not self.is_link(v, dst):
                raise BandwidthViolation((v, dst), rnd, "no such link")
            if dst in seen:
                raise BandwidthViolation((v, dst), rnd)
            seen.add(dst)
            check_word(payload, self.word_limit)
            result.append((dst, payload))
        return result

    def run(
        self,
        programs: Programs,
        states: Optional[list] = None,
        halt: Optional[Callable[["Network", list, int], bool]] = None,
        name: str = "",
    ) -> RunResult:
        """Run one phase until ``halt`` holds (default: every node is done)."""
        progs = self._programs(programs)
        ctxs = [
            NodeContext(v, self.n, self.mu, self.comm[v], self.rngs[v]) for v in range(self.n)
        ]
        if states is None:
            states = [progs[v].init(ctxs[v]) for v in range(self.n)]
        else:
            states = list(states)
        metrics = MetricsRecord(self.n)
        outputs: list = []
        for v in range(self.n):
            self._charge(v, progs[v].size(states[v]), 0, metrics)

        def halted(rnd):
            if halt is not None:
                return halt(self, states, rnd)
            return all(progs[v].done(ctxs[v], states[v]) for v in range(self.n))

        rnd = 0
        while not halted(rnd):
            rnd += 1
            if rnd > self.round_cap:
                raise NonTermination(self.round_cap)
            inboxes: list[list] = [[] for _ in range(self.n)]
            for v in range(self.n):
                ctx = ctxs[v]
                ctx.round = rnd
                states[v], out = progs[v].send(ctx, states[v])
                sent = self._outgoing(v, out, rnd)
                for dst, payload in sent:
                    inboxes[dst].append((v, payload))
                metrics.words_sent_total += len(sent)
                self._charge(v, progs[v].size(states[v]), rnd, metrics)
            for v in range(self.n):
                inbox = inboxes[v]
                if self.sub_degree and len(inbox) > 1:
                    self._inbox_rng.shuffle(inbox)
                ctx = ctxs[v]
                self._charge(v, progs[v].size(states[v]) + len(inbox), rnd, metrics)
                states[v], emitted = progs[v].receive(ctx, states[v], inbox)
                if emitted:
                    for item in emitted:
                        outputs.append((v, item))
                        metrics.outputs_emitted += 1
                self._charge(v, progs[v].size(states[v]), rnd, metrics)
        metrics.rounds_total = rnd
        self.metrics.absorb(metrics)
        self.outputs.extend(outputs)
        self.phase_log.append((name, rnd))
        return RunResult(outputs, metrics, states)

    def snapshot(self) -> tuple:
        m = self.metrics
        return (m.rounds_total, m.words_sent_total, m.outputs_emitted)

    def metrics_since(self, snap: tuple) -> MetricsRecord:
        """Cost of the phases run after ``snap`` (memory peaks are cumulative)."""
        m = MetricsRecord(self.n)
        m.rounds_total = self.metrics.rounds_total - snap[0]
        m.words_sent_total = self.metrics.words_sent_total - snap[1]
        m.outputs_emitted = self.metrics.outputs_emitted - snap[2]
        m.max_words_per_node = list(self.metrics.max_words_per_node)
        return m

    def charge_local(self, v: int, words: int) -> None:
        """Record a purely local computation's peak footprint at node ``v``."""
        self._charge(v, words, self.metrics.rounds_total, self.metrics)


def run_simulation(
    graph: Graph,
    programs: Programs,
    mu: int,
    seed: int = 0,
    halt: Optional[Callable] = None,
    *,
    round_cap: int = DEFAULT_ROUND_CAP,
    topology: str = "graph",
    sub_degree: bool = False,
    charge_adjacency: bool = False,
) -> RunResult:
    """Run ``programs`` on ``graph`` with ``mu`` words per node; one phase."""
    net = Network(
        graph,
        mu,
        seed,
        topology=topology,
        sub_degree=sub_degree,
        round_cap=round_cap,
        charge_adjacency=charge_adjacency,
    )
    return net.run(programs, halt=halt)
