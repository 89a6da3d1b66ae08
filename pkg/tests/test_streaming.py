import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mucongest.cliques import brute_force_triangles
from mucongest.errors import InsufficientMemory, InvalidParams
from mucongest.graphs import Graph, cycle_of_cliques, gnp_graph, path_graph, star_graph
from mucongest.streaming import (
    REGISTRY,
    ConnectivityForest,
    EdgeCount,
    MaxId,
    TriangleCount2Pass,
    adversarial_instance,
    make_algorithm,
    naive_p_pass,
    run_centrally,
    simulate_p_pass,
    simulator_node,
)


def connected_gnp(n, p, seed):
    for s in range(seed, seed + 50):
        g = gnp_graph(n, p, s)
        if g.is_connected():
            return g
    raise AssertionError("no connected draw")


def test_edge_count_is_m():
    g = connected_gnp(20, 0.3, 0)
    run = simulate_p_pass(g, EdgeCount(), mu=g.max_degree + g.n + 4)
    assert run.result == g.m
    assert sorted(run.pass_items[0]) == g.edges


def test_max_id_on_star():
    g = star_graph(7)
    run = simulate_p_pass(g, MaxId(passes=3), mu=16)
    assert run.result == 6
    assert run.passes == 3
    assert all(r <= 4 * g.n * 2 for r in run.pass_rounds[1:])


def test_two_pass_triangles_with_n_words():
    g = connected_gnp(16, 0.5, 1)
    run = simulate_p_pass(g, TriangleCount2Pass(16), mu=g.max_degree + 40)
    assert run.result == len(brute_force_triangles(g))
    assert run.passes % 2 == 0


def test_triangle_counter_evicts_and_takes_more_passes():
    g = connected_gnp(16, 0.5, 1)
    small = TriangleCount2Pass(16, memory_budget=12)
    res, _ = run_centrally(small, [g.edges] * 40)
    assert res == len(brute_force_triangles(g))


def test_triangle_counter_refuses_a_too_small_budget():
    g = star_graph(9)
    with pytest.raises(InsufficientMemory):
        run_centrally(TriangleCount2Pass(9, memory_budget=4), [g.edges] * 4)


def test_spanning_forest_emits_tree_edges():
    g = connected_gnp(18, 0.3, 2)
    run = simulate_p_pass(g, ConnectivityForest(g.n), mu=2 * g.n + g.max_degree)
    assert run.result == 1
    assert len(run.outputs) == g.n - 1


def test_single_pass_costs_about_the_same_either_way():
    g = connected_gnp(24, 0.4, 3)
    mu = g.max_degree + g.n + 4
    cached = simulate_p_pass(g, EdgeCount(1), mu)
    naive = naive_p_pass(g, EdgeCount(1), mu)
    assert cached.result == naive.result == g.m
    assert naive.metrics.rounds_total <= cached.metrics.rounds_total <= 2 * naive.metrics.rounds_total


def test_caching_pays_off_on_a_star():
    g = star_graph(17)
    mu = 40
    cached = simulate_p_pass(g, EdgeCount(8), mu)
    naive = naive_p_pass(g, EdgeCount(8), mu)
    assert naive.metrics.rounds_total >= 2 * cached.metrics.rounds_total


def test_empty_stream():
    run = simulate_p_pass(Graph(1), EdgeCount(1), mu=4)
    assert run.result == 0 and run.pass_items == [[]]


def test_simulator_is_lowest_id_max_degree_node():
    g = Graph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)])
    assert simulator_node(g) == 1


def test_memory_preconditions():
    g = cycle_of_cliques(24, 4)
    with pytest.raises(InsufficientMemory):
        simulate_p_pass(g, EdgeCount(2), mu=6)
    with pytest.raises(InvalidParams):
        simulate_p_pass(Graph(4, [(0, 1)]), EdgeCount(), mu=10)


def test_adversarial_instance_shapes():
    assert adversarial_instance(12, 4).m == 16
    assert adversarial_instance(6, 3).m == 6


def test_registry_names():
    assert set(REGISTRY) == {"edge_count", "max_id", "triangle_count_2pass", "connectivity_spanning_forest"}
    g = path_graph(4)
    assert make_algorithm("triangle_count_2pass", g).M == 4
    with pytest.raises(InvalidParams):
        make_algorithm("nope", g)
    with pytest.raises(InvalidParams):
        make_algorithm("edge_count", g, bogus=1)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 20), p=st.floats(0.2, 0.8), seed=st.integers(0, 500), passes=st.integers(1, 4))
def test_every_pass_streams_each_edge_once_in_the_same_order(n, p, seed, passes):
    g = connected_gnp(n, p, seed)
    mu = g.max_degree + n + 4
    for run in (simulate_p_pass(g, MaxId(passes), mu, seed), naive_p_pass(g, MaxId(passes), mu, seed)):
        assert run.result == n - 1
        assert run.passes == passes
        for items in run.pass_items:
            assert sorted(items) == g.edges
        assert run.metrics.max_words_resident <= mu
    cached = simulate_p_pass(g, MaxId(passes), mu, seed)
    assert all(items == cached.pass_items[0] for items in cached.pass_items)
