import itertools
import math
import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mucongest.cliques import (
    brute_force_cliques,
    brute_force_triangles,
    build_subset_cover,
    deliver,
    list_kcliques_all_to_all,
    list_local_triangles,
    listing_set_size,
    low_avg_degree_cluster_filter,
    prune_low_degree,
    route_to_targets,
    routing_bound,
)
from mucongest.engine import Network
from mucongest.errors import BatchTooLarge, InvalidParams, ModelMismatch, PremiseViolated
from mucongest.graphs import Graph, complete_graph, gnp_graph, path_graph, star_graph


def nx_cliques(g, k):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    out = set()
    for cl in nx.enumerate_all_cliques(h):
        if len(cl) == k:
            out.add(tuple(sorted(cl)))
        elif len(cl) > k:
            break
    return out


# -- subset covers -----------------------------------------------------------


def test_cover_twelve_six_three():
    cov = build_subset_cover(12, 6, 3)
    assert cov.block_size == 2
    assert cov.z_raw == 216
    assert all(cov.covers(t) for t in itertools.combinations(range(1, 13), 3))


def test_cover_single_set_when_b_equals_a():
    cov = build_subset_cover(4, 4, 2)
    assert cov.sets == [[1, 2, 3, 4]]
    assert cov.z == 1


def test_cover_eight_four_two():
    cov = build_subset_cover(8, 4, 2)
    assert cov.block_size == 2 and cov.z_raw == 16
    assert all(cov.covers(p) for p in itertools.combinations(range(1, 9), 2))


@pytest.mark.parametrize("a,b,c", [(4, 5, 2), (6, 3, 2), (6, 4, 1), (6, 2, 3)])
def test_cover_rejects_bad_parameters(a, b, c):
    with pytest.raises(InvalidParams):
        build_subset_cover(a, b, c)


def test_cover_sets_have_at_most_b_elements():
    cov = build_subset_cover(10, 4, 2)  # padded universe
    assert cov.padded_a == 10
    assert all(len(s) <= 4 for s in cov.sets)
    cov = build_subset_cover(11, 6, 3)
    assert cov.padded_a == 12
    assert all(max(s) <= 11 for s in cov.sets)


# -- oracles -----------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 14), p=st.floats(0, 1), seed=st.integers(0, 999), k=st.integers(3, 5))
def test_brute_force_matches_networkx(n, p, seed, k):
    g = gnp_graph(n, p, seed)
    assert brute_force_cliques(g, k) == nx_cliques(g, k)
    if k == 3:
        assert brute_force_triangles(g) == nx_cliques(g, 3)


# -- routing -----------------------------------------------------------------


def test_route_one_word_each_way_takes_one_round():
    msgs = [(u, v, u) for u in range(4) for v in range(4) if u != v]
    sched = route_to_targets(msgs, 4)
    assert sched.rounds == 1


def test_route_many_words_to_one_target_uses_relays():
    msgs = [(1, 0, i) for i in range(8)]
    sched = route_to_targets(msgs, 5)
    assert sched.rounds <= routing_bound(msgs, 5)
    assert math.ceil(8 / 4) <= sched.rounds
    net = Network(complete_graph(5), 16, topology="clique")
    got = deliver(net, msgs, sched)
    assert sorted(got[0]) == list(range(8))


def test_route_empty():
    assert route_to_targets([], 4).rounds == 0
    assert routing_bound([], 4) == 0


def test_route_limits():
    with pytest.raises(BatchTooLarge):
        route_to_targets([(1, 0, i) for i in range(5)], 4, mu=4)
    with pytest.raises(InvalidParams):
        route_to_targets([(1, 1, 0)], 4)
    with pytest.raises(ModelMismatch):
        deliver(Network(path_graph(3), 4), [(0, 1, 0)], route_to_targets([(0, 1, 0)], 3))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 10), count=st.integers(0, 60), seed=st.integers(0, 999))
def test_routing_delivers_everything_conflict_free(n, count, seed):
    rng = random.Random(seed)
    msgs = []
    for i in range(count):
        src, dst = rng.sample(range(n), 2)
        msgs.append((src, dst, i % 2))
    sched = route_to_targets(msgs, n)
    assert all(load == 1 for load in sched.link_loads().values())
    assert sched.rounds <= routing_bound(msgs, n, c0=2) + 2 * math.ceil(count / max(n - 1, 1))
    net = Network(complete_graph(n), count + n + 4, topology="clique")
    got = deliver(net, msgs, sched)
    for v in range(n):
        assert sorted(got[v]) == sorted(w for _, d, w in msgs if d == v)


# -- listing -----------------------------------------------------------------


def test_listing_on_k5():
    res = list_kcliques_all_to_all(complete_graph(5), 3, mu=5)
    assert res.cliques == set(itertools.combinations(range(5), 3))


def test_listing_on_gnp24_matches_brute_force():
    for seed in range(3):
        g = gnp_graph(24, 0.5, seed)
        res = list_kcliques_all_to_all(g, 3, mu=24, seed=seed)
        assert res.cliques == brute_force_triangles(g)
        assert res.max_batch_words <= 24
        assert res.metrics.max_words_resident <= 24


def test_listing_on_empty_graph():
    res = list_kcliques_all_to_all(Graph(10), 3, mu=10)
    assert res.cliques == set()


def test_listing_four_cliques():
    g = gnp_graph(16, 0.6, 4)
    res = list_kcliques_all_to_all(g, 4, mu=32)
    assert res.cliques == brute_force_cliques(g, 4)


def test_listing_iterations_follow_the_cover():
    g = gnp_graph(32, 0.5, 0)
    runs = [list_kcliques_all_to_all(g, 3, mu=mu) for mu in (32, 128, 512)]
    for res in runs:
        a = max(len(res.assignment.universe(c)) for c in res.assignment.masters)
        cover = build_subset_cover(a, res.set_size, 3)
        assert res.iterations == cover.z <= cover.z_raw
        assert cover.z_raw == math.ceil(a * 3 / res.set_size) ** 3
    assert runs[0].iterations > runs[1].iterations > runs[2].iterations


def test_listing_set_size_fits_memory():
    for mu in (6, 24, 100, 1000):
        b, window = listing_set_size(mu, 3)
        assert b % 3 == 0 and window * math.comb(b, 2) <= mu
    with pytest.raises(InvalidParams):
        listing_set_size(2, 3)


# -- local triangles, pruning, cluster filter -------------------------------------


def test_local_triangles_center_of_k4():
    g = complete_graph(4)
    res = list_local_triangles(g, nodes=[0])
    assert res.per_node[0] == {(0, 1, 2), (0, 1, 3), (0, 2, 3)}
    assert res.metrics.rounds_total <= 4 * 3


def test_local_triangles_star_and_triangle():
    assert list_local_triangles(star_graph(5), nodes=[0]).per_node[0] == set()
    tri = Graph(3, [(0, 1), (1, 2), (0, 2)])
    assert list_local_triangles(tri, nodes=[1]).per_node[1] == {(0, 1, 2)}


@settings(max_examples=20, deadline=None)
@given(n=st.integers(3, 14), p=st.floats(0.2, 0.9), seed=st.integers(0, 999))
def test_local_triangles_cover_everything(n, p, seed):
    g = gnp_graph(n, p, seed)
    assert list_local_triangles(g).triangles == brute_force_triangles(g)


def test_prune_path_removes_everything():
    res = prune_low_degree(path_graph(6), c=2)
    assert res.threshold == pytest.approx(10 / 3)
    assert res.removed == set(range(6)) and res.triangles == set()


def test_prune_k6_lists_all_triangles():
    res = prune_low_degree(complete_graph(6), c=2)
    assert res.removed == set(range(6))
    assert len(res.triangles) == 20


def test_prune_keeps_high_degree_nodes():
    g = star_graph(9)  # gamma = 16/9, threshold 8/3 at c = 1.5
    res = prune_low_degree(g, c=1.5)
    assert 0 not in res.removed and res.removed == set(range(1, 9))


def test_filter_whole_graph_cluster():
    g = gnp_graph(12, 0.5, 1)
    res = low_avg_degree_cluster_filter(g, [range(12)], c=2, d=1)
    assert res.e_low == set()


def test_filter_two_k4s_joined_by_an_edge():
    edges = list(itertools.combinations(range(4), 2))
    edges += [(u + 4, v + 4) for u, v in edges] + [(3, 4)]
    g = Graph(8, edges)
    res = low_avg_degree_cluster_filter(g, [range(4), range(4, 8)], c=4, d=2)
    assert res.gamma == pytest.approx(2 * 13 / 8)
    assert res.low_clusters == [] and res.bound_holds


def test_filter_premise():
    g = complete_graph(6)
    with pytest.raises(PremiseViolated):
        low_avg_degree_cluster_filter(g, [[0], [1]], c=2, d=1)
    assert low_avg_degree_cluster_filter(g, [[0], [1]], c=2, d=1, strict=False).bound_holds is None


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), parts=st.integers(1, 6))
def test_filter_bound_on_random_partitions(seed, parts):
    g = gnp_graph(20, 0.5, seed)
    rng = random.Random(seed)
    labels = [rng.randrange(parts) for _ in range(20)]
    clusters = [[v for v in range(20) if labels[v] == i] for i in range(parts)]
    res = low_avg_degree_cluster_filter(g, clusters, c=4, d=parts, strict=False)
    if res.premise_holds:
        assert len(res.e_low) * 4 <= parts * g.m
