import operator

import networkx as nx
from hypothesis import given, settings
from hypothesis import strategies as st

from mucongest.engine import Network
from mucongest.graphs import Graph, complete_graph, gnp_graph, path_graph, star_graph
from mucongest.trees import (
    aggregate_up_tree,
    bfs_tree,
    broadcast,
    build_tree,
    degree_class,
    relabel_by_degree_class,
)


def test_path_sum_reaches_root():
    res = aggregate_up_tree(path_graph(5), 0, [[1]] * 5)
    assert res.aggregates[0] == [5]
    assert res.metrics.rounds_total <= 4 * (1 + 4)


def test_single_node_aggregate_is_its_own_value():
    res = aggregate_up_tree(Graph(1), 0, [[3, 4, 5]])
    assert res.aggregates[0] == [3, 4, 5]
    assert res.metrics.rounds_total == 0


def test_star_elementwise_max():
    vals = [[v, 10 - v] for v in range(7)]
    res = aggregate_up_tree(star_graph(7), 0, vals, combine=max)
    assert res.aggregates[0] == [6, 10]
    assert res.metrics.rounds_total <= 4 * (2 + 1)


def test_relabel_clique_is_one_class():
    r = relabel_by_degree_class(complete_graph(4))
    assert sorted(r.new_ids) == [1, 2, 3, 4]
    assert [c for c in r.table if c] == [4]


def test_relabel_star_intervals():
    r = relabel_by_degree_class(star_graph(9))
    assert degree_class(8) == 3
    assert r.new_ids[0] == 9
    assert sorted(r.new_ids[1:]) == list(range(1, 9))
    assert r.table[0] == 8 and r.table[3] == 1
    assert r.class_of_id(9) == 3 and r.class_of_id(1) == 0


def test_relabel_path_table():
    r = relabel_by_degree_class(path_graph(3))
    assert r.table[:2] == [2, 1]
    assert r.new_ids[1] == 3


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 24), p=st.floats(0.15, 0.9), seed=st.integers(0, 500))
def test_relabel_classes_are_contiguous(n, p, seed):
    g = gnp_graph(n, p, seed)
    if not g.is_connected():
        return
    r = relabel_by_degree_class(g)
    assert sorted(r.new_ids) == list(range(1, n + 1))
    for v in range(n):
        assert r.class_of_id(r.new_ids[v]) == degree_class(g.degree(v))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 24), p=st.floats(0.15, 0.9), seed=st.integers(0, 500), x=st.integers(1, 4))
def test_distributed_tree_and_sums(n, p, seed, x):
    g = gnp_graph(n, p, seed)
    if not g.is_connected():
        return
    ref = bfs_tree(g, 0)
    dist = nx.single_source_shortest_path_length(nx.Graph(g.edges), 0) if g.m else {0: 0}
    assert ref.depth == [dist[v] for v in range(n)]
    vals = [[(v * 7 + i) % 11 for i in range(x)] for v in range(n)]
    res = aggregate_up_tree(g, 0, vals, operator.add)
    for v in range(n):
        sub = res.tree.subtree(v)
        assert res.aggregates[v] == [sum(vals[u][i] for u in sub) for i in range(x)]
    assert res.tree.depth == ref.depth
    # pipelined: linear in x plus depth, not their product
    assert res.metrics.rounds_total <= 4 * (x + g.diameter() + 1)


def test_broadcast_reaches_everyone():
    g = gnp_graph(20, 0.3, 1)
    net = Network(g, g.max_degree + 8)
    tree = build_tree(net, 0)
    got = broadcast(net, tree, [5, 6, 7])
    assert all(words == [5, 6, 7] for words in got)
