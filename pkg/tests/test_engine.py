import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mucongest.engine import (
    MetricsRecord,
    Network,
    NodeProgram,
    alg_rng,
    node_rng,
    payload_bits,
    run_simulation,
    word_bits,
    words_of,
)
from mucongest.errors import BandwidthViolation, MemoryExceeded, NonTermination, WordTooLarge
from mucongest.graphs import Graph, complete_graph, path_graph, star_graph


class SendOnce(NodeProgram):
    def init(self, ctx):
        return {"sent": False}

    def send(self, ctx, st):
        if st["sent"]:
            return st, ()
        st["sent"] = True
        return st, {u: ctx.node for u in ctx.neighbors}

    def done(self, ctx, st):
        return st["sent"]


class CenterCollects(NodeProgram):
    def init(self, ctx):
        return {"got": [], "round": 0}

    def send(self, ctx, st):
        if ctx.node != 0 and ctx.round == 1:
            return st, {0: ctx.node}
        return st, ()

    def receive(self, ctx, st, inbox):
        st["round"] = ctx.round
        st["got"].extend(w for _, w in inbox)
        out = list(st["got"]) if ctx.node == 0 else ()
        return st, out

    def done(self, ctx, st):
        return st["round"] >= 1


def test_two_nodes_exchange_one_word_each():
    res = run_simulation(Graph(2, [(0, 1)]), SendOnce(), mu=4)
    assert res.metrics.rounds_total == 1
    assert res.metrics.words_sent_total == 2


def test_idle_run_takes_no_rounds():
    res = run_simulation(path_graph(4), NodeProgram(), mu=2)
    assert res.metrics.rounds_total == 0
    assert res.outputs == []


def test_star_center_collects_every_leaf():
    res = run_simulation(star_graph(5), CenterCollects(), mu=8)
    assert sorted(item for _, item in res.outputs) == [1, 2, 3, 4]
    assert res.metrics.rounds_total == 1
    assert res.metrics.max_words_per_node[0] >= 4


def test_inbox_counts_against_memory():
    with pytest.raises(MemoryExceeded):
        run_simulation(star_graph(8), CenterCollects(), mu=7)


class DoubleSend(NodeProgram):
    def send(self, ctx, st):
        if ctx.node == 0 and ctx.round == 1:
            return st, [(1, 1), (1, 2)]
        return st, ()

    def done(self, ctx, st):
        return ctx.round >= 1


def test_two_words_on_one_link_rejected():
    with pytest.raises(BandwidthViolation):
        run_simulation(path_graph(2), DoubleSend(), mu=4)


class NonNeighbor(NodeProgram):
    def send(self, ctx, st):
        if ctx.node == 0 and ctx.round == 1:
            return st, {2: 5}
        return st, ()

    def done(self, ctx, st):
        return ctx.round >= 1


def test_sending_to_a_non_neighbor_rejected():
    with pytest.raises(BandwidthViolation):
        run_simulation(path_graph(3), NonNeighbor(), mu=4)
    # the all-to-all topology allows it
    res = run_simulation(path_graph(3), NonNeighbor(), mu=4, topology="clique")
    assert res.metrics.words_sent_total == 1


class BigWord(NodeProgram):
    def send(self, ctx, st):
        if ctx.node == 0 and ctx.round == 1:
            return st, {1: 1 << 40}
        return st, ()

    def done(self, ctx, st):
        return ctx.round >= 1


def test_oversized_word_rejected():
    with pytest.raises(WordTooLarge):
        run_simulation(path_graph(4), BigWord(), mu=4)


class Forever(NodeProgram):
    def done(self, ctx, st):
        return False


def test_round_cap_stops_runaway_programs():
    with pytest.raises(NonTermination):
        run_simulation(path_graph(2), Forever(), mu=2, round_cap=10)


def test_memory_below_one_rejected():
    with pytest.raises(ValueError):
        Network(path_graph(2), 0)


def test_word_size_scales_with_log_n():
    assert word_bits(2) == 4
    assert word_bits(1024) == 40
    assert word_bits(1025) == 44
    assert payload_bits((3, 4)) == payload_bits(3) + payload_bits(4)
    with pytest.raises(WordTooLarge):
        payload_bits("x")


def test_words_of_counts_containers():
    assert words_of(None) == 0
    assert words_of([1, 2, (3, 4)]) == 3
    assert words_of({1: [2, 3]}) == 3
    assert words_of({"field": [2, 3]}) == 2


def test_named_rngs_are_stable_and_distinct():
    assert alg_rng(3, "a").random() == alg_rng(3, "a").random()
    assert alg_rng(3, "a").random() != alg_rng(3, "b").random()
    assert node_rng(3, 1).random() != node_rng(3, 2).random()


def test_phases_accumulate_metrics():
    net = Network(complete_graph(4), 8)
    net.run(SendOnce())
    snap = net.snapshot()
    net.run(SendOnce())
    assert net.metrics.rounds_total == 2
    assert net.metrics.words_sent_total == 24
    assert net.metrics_since(snap).rounds_total == 1


def test_metrics_absorb_takes_peak_per_node():
    a, b = MetricsRecord(2), MetricsRecord(2)
    a.max_words_per_node, b.max_words_per_node = [3, 1], [1, 5]
    a.rounds_total, b.rounds_total = 2, 3
    a.absorb(b)
    assert a.max_words_per_node == [3, 5]
    assert a.as_dict()["rounds"] == 5


class RandomTalk(NodeProgram):
    """Each node sends its id to a seeded random subset of neighbors for a few rounds."""

    def __init__(self, rounds):
        self.rounds = rounds

    def init(self, ctx):
        return {"heard": 0}

    def send(self, ctx, st):
        if ctx.round > self.rounds:
            return st, ()
        return st, {u: ctx.node for u in ctx.neighbors if ctx.rng.random() < 0.5}

    def receive(self, ctx, st, inbox):
        st["heard"] += len(inbox)
        return st, ()

    def done(self, ctx, st):
        return ctx.round >= self.rounds


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 9), seed=st.integers(0, 10_000), rounds=st.integers(1, 4))
def test_runs_are_deterministic_and_within_budget(n, seed, rounds):
    g = complete_graph(n)
    a = run_simulation(g, RandomTalk(rounds), mu=n + 4, seed=seed)
    b = run_simulation(g, RandomTalk(rounds), mu=n + 4, seed=seed)
    assert a.metrics.as_dict() == b.metrics.as_dict()
    assert [s["heard"] for s in a.states] == [s["heard"] for s in b.states]
    assert a.metrics.max_words_resident <= n + 4
    assert a.metrics.words_sent_total == sum(s["heard"] for s in a.states)
    assert a.metrics.words_sent_total <= rounds * n * (n - 1)
