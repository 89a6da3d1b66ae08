import random

from hypothesis import given, settings
from hypothesis import strategies as st

from mucongest.engine import Network
from mucongest.graphs import gnp_graph, path_graph
from mucongest.transport import PathSchedule, Transfer, TransferHooks, run_transfers, tree_path
from mucongest.trees import bfs_tree


class Payloads(TransferHooks):
    """Source app holds {key: [words]}; destination app collects {key: [words]}."""

    def __init__(self, data):
        self.data = data

    def produce(self, v, app, key, idx):
        return self.data[key][idx]

    def deliver(self, v, app, key, idx, word):
        app.setdefault(key, []).append(word)
        return app

    def size(self, v, app):
        return sum(len(x) for x in app.values())


def test_single_hop_and_relay_timing():
    sched = PathSchedule()
    a = sched.place(Transfer("a", [0, 1], 3))
    b = sched.place(Transfer("b", [0, 1, 2], 2))
    assert a.departs == [1, 2, 3] and a.arrivals == [1, 2, 3]
    # link 0->1 is busy in rounds 1..3
    assert b.departs == [4, 5] and b.arrivals == [5, 6]
    assert sched.rounds == 6


def test_after_constraint():
    sched = PathSchedule()
    p = sched.place(Transfer("x", [3, 2, 1], 2, after=7))
    assert min(p.arrivals) > 7


def test_zero_hop_transfer():
    sched = PathSchedule()
    assert sched.place(Transfer("self", [4], 5)).arrivals == []
    assert sched.rounds == 0


def test_tree_path():
    g = path_graph(6)
    t = bfs_tree(g, 2)
    assert tree_path(t.parent, t.depth, 0, 5) == [0, 1, 2, 3, 4, 5]
    assert tree_path(t.parent, t.depth, 4, 4) == [4]


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 14), count=st.integers(1, 10), seed=st.integers(0, 10_000))
def test_random_transfers_arrive_in_order_without_conflicts(n, count, seed):
    g = gnp_graph(n, 0.5, seed)
    if not g.is_connected():
        return
    rng = random.Random(seed)
    tree = bfs_tree(g, 0)
    sched = PathSchedule()
    data = {}
    for key in range(count):
        a, b = rng.sample(range(n), 2)
        length = rng.randint(1, 4)
        data[key] = [rng.randrange(n) for _ in range(length)]
        sched.place(Transfer(key, tree_path(tree.parent, tree.depth, a, b), length, ready=rng.randint(1, 3)))
    hops = {}
    for p in sched.placements:
        path = p.transfer.path
        for t in p.departs:
            for h in range(len(path) - 1):
                slot = (path[h], path[h + 1], t + h)
                assert slot not in hops
                hops[slot] = p.transfer.key
    apps = [{} for _ in range(n)]
    net = Network(g, max(g.max_degree, 1) + 4 * count + 8, seed)
    out = run_transfers(net, sched, Payloads(data), apps)
    for p in sched.placements:
        dst = p.transfer.path[-1]
        assert out[dst][p.transfer.key] == data[p.transfer.key]
    log = sched.arrival_log(sched.placements[0].transfer.path[-1])
    assert log == sorted(log, key=lambda x: (x[0], x[1]))
    assert net.metrics.rounds_total == sched.rounds
