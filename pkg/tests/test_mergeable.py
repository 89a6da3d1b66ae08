import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mucongest.errors import InsufficientMemory, InvalidParams, NotComposable
from mucongest.graphs import Graph, gnp_graph, path_graph, star_graph
from mucongest.mergeable import (
    centroid_parts,
    edge_inputs,
    exact_heavy_hitters,
    find_centroid,
    one_way_oracle,
    partition_clusters,
    replay_merge_log,
    simulate_composable,
    simulate_fully_mergeable,
    simulate_one_way,
)
from mucongest.sketches import make_sketch
from mucongest.trees import bfs_tree


def random_tree(n, seed):
    rng = random.Random(seed)
    return Graph(n, [(i, rng.randrange(i)) for i in range(1, n)])


def zipf(count, rng, top=12):
    return rng.choices(range(1, top + 1), [1 / k**1.3 for k in range(1, top + 1)], k=count)


def spread_inputs(n, rng, max_items=4, top=12):
    return [zipf(rng.randint(0, max_items), rng, top) for _ in range(n)]


def roomy_mu(graph, kind):
    return graph.max_degree + 2 * kind.budget + 1 + 8


def brute_centroid_ok(tree, masses, u):
    return all(2 * p <= sum(masses) for p in centroid_parts(tree, masses, u))


# -- partition -------------------------------------------------------------------


def test_path_of_nine_splits_into_three():
    plan = partition_clusters(bfs_tree(path_graph(9), 0), [1] * 9, 3)
    assert sorted(sorted(c.members) for c in plan.clusters) == [[0, 1, 2], [3, 4, 5], [6, 7, 8]]
    assert plan.violations() == []


def test_single_heavy_node_is_a_singleton():
    plan = partition_clusters(bfs_tree(Graph(1), 0), [10], 3)
    assert [(c.members, c.kind) for c in plan.clusters] == [([0], "singleton")]


def test_star_clusters():
    plan = partition_clusters(bfs_tree(star_graph(7), 0), [1] * 7, 2)
    assert all(2 <= c.mass <= 6 for c in plan.clusters)
    assert len(plan.clusters) <= 7
    assert sorted(sorted(c.members) for c in plan.clusters) == [[0, 5, 6], [1, 2], [3, 4]]


def test_partition_rejects_tiny_s():
    with pytest.raises(InvalidParams):
        partition_clusters(bfs_tree(path_graph(3), 0), [1, 1, 1], 0.5)


@settings(max_examples=80, deadline=None)
@given(n=st.integers(1, 40), seed=st.integers(0, 10**6), s=st.floats(1, 12), heavy=st.integers(0, 30))
def test_partition_structure_on_random_trees(n, seed, s, heavy):
    rng = random.Random(seed)
    t = [rng.choice([0, 0, 1, 1, 2, 3, heavy]) for _ in range(n)]
    plan = partition_clusters(bfs_tree(random_tree(n, seed), 0), t, s)
    assert plan.violations() == []
    for c in plan.clusters:
        if c.kind != "singleton":
            assert c.mass <= 3 * s
    assert len(plan.clusters) <= plan.count_bound()


# -- centroid --------------------------------------------------------------------


def test_centroid_examples():
    assert find_centroid(bfs_tree(path_graph(3), 0), [1, 1, 1]) == 1
    assert find_centroid(bfs_tree(Graph(1), 0), [4]) == 0
    tree = bfs_tree(star_graph(6), 0)
    masses = [1, 10, 1, 1, 1, 1]
    u = find_centroid(tree, masses)
    assert u == 1 and centroid_parts(tree, masses, u) == [5]
    assert [v for v in range(6) if brute_centroid_ok(tree, masses, v)] == [1]


@settings(max_examples=80, deadline=None)
@given(n=st.integers(1, 40), seed=st.integers(0, 10**6))
def test_centroid_property_on_random_trees(n, seed):
    rng = random.Random(seed)
    tree = bfs_tree(random_tree(n, seed), 0)
    masses = [rng.choice([0, 1, 1, 2, 5]) for _ in range(n)]
    u = find_centroid(tree, masses)
    assert brute_centroid_ok(tree, masses, u)


# -- one-way ----------------------------------------------------------------------


def test_one_way_gk_on_a_path():
    g = path_graph(8)
    inputs = [[v + 1] for v in range(8)]
    kind = make_sketch("gk", 0.5, 8)
    run = simulate_one_way(g, inputs, kind, mu=roomy_mu(g, kind))
    for r in range(1, 9):
        assert abs(run.result.query(r) - r) <= 4
    assert run.result == one_way_oracle(inputs, kind, run.plan, run.arrivals, run.fold_order)


def test_one_way_single_holder():
    g = path_graph(5)
    inputs = [[], [], [4, 1, 4, 2, 9], [], []]
    kind = make_sketch("mg", 0.25, 5)
    run = simulate_one_way(g, inputs, kind, mu=roomy_mu(g, kind))
    assert run.result == kind.summarize(inputs[2])


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 24), seed=st.integers(0, 10**6), name=st.sampled_from(["gk", "mg", "linfreq"]))
def test_one_way_matches_cluster_oracle(n, seed, name):
    rng = random.Random(seed)
    g = random_tree(n, seed) if seed % 2 else gnp_graph(n, 0.4, seed)
    if not g.is_connected():
        return
    inputs = spread_inputs(n, rng)
    kind = make_sketch(name, 0.25, sum(map(len, inputs)))
    mu = roomy_mu(g, kind)
    run = simulate_one_way(g, inputs, kind, mu=mu, seed=seed)
    assert run.result == one_way_oracle(inputs, kind, run.plan, run.arrivals, run.fold_order)
    assert run.leaders == run.plan.leader_of()
    assert run.result.m == sum(map(len, inputs))
    assert run.metrics.max_words_resident <= mu


# -- fully mergeable and composable ----------------------------------------------------


def test_fully_mergeable_mg_on_random_tree():
    rng = random.Random(4)
    g = random_tree(30, 4)
    inputs = spread_inputs(30, rng, 6)
    m = sum(map(len, inputs))
    kind = make_sketch("mg", 0.25, m)
    run = simulate_fully_mergeable(g, inputs, kind, mu=roomy_mu(g, kind))
    f = Counter(x for xs in inputs for x in xs)
    assert all(0 <= f[x] - run.result.estimate(x) <= 0.25 * m for x in f)
    assert run.result == replay_merge_log(inputs, kind, run.merge_log)


def test_all_input_at_one_node_needs_no_merge():
    g = star_graph(6)
    inputs = [[], [], [], [3, 3, 5], [], []]
    kind = make_sketch("mg", 0.25, 3)
    run = simulate_fully_mergeable(g, inputs, kind, mu=roomy_mu(g, kind))
    assert run.result == kind.summarize(inputs[3])
    assert not any(e[0] == "merge" for e in run.merge_log)


def test_composable_is_the_sum_and_no_slower():
    g = star_graph(9)
    rng = random.Random(2)
    inputs = [zipf(3, rng) for _ in range(9)]
    kind = make_sketch("linfreq", 0.5)
    mu = roomy_mu(g, kind)
    comp = simulate_composable(g, inputs, kind, mu=mu)
    full = simulate_fully_mergeable(g, inputs, kind, mu=mu)
    assert comp.result == full.result == kind.summarize(x for xs in inputs for x in xs)
    assert comp.rounds <= full.rounds


def test_composable_needs_a_composable_sketch():
    g = path_graph(3)
    kind = make_sketch("mg", 0.25)
    with pytest.raises(NotComposable):
        simulate_composable(g, [[1], [2], [3]], kind, mu=roomy_mu(g, kind))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 24), seed=st.integers(0, 10**6), name=st.sampled_from(["gk", "mg", "linfreq"]))
def test_fully_mergeable_replays_bit_exactly(n, seed, name):
    rng = random.Random(seed)
    g = random_tree(n, seed) if seed % 2 else gnp_graph(n, 0.4, seed)
    if not g.is_connected():
        return
    inputs = spread_inputs(n, rng)
    kind = make_sketch(name, 0.25, sum(map(len, inputs)))
    mu = roomy_mu(g, kind)
    run = simulate_fully_mergeable(g, inputs, kind, mu=mu, seed=seed)
    assert run.result == replay_merge_log(inputs, kind, run.merge_log)
    assert run.result.m == sum(map(len, inputs))
    assert run.metrics.max_words_resident <= mu
    if name == "linfreq":
        comp = simulate_composable(g, inputs, kind, mu=mu, seed=seed)
        assert comp.result == run.result == replay_merge_log(inputs, kind, comp.merge_log)


def test_memory_must_hold_two_summaries():
    g = path_graph(4)
    kind = make_sketch("mg", 0.25)
    with pytest.raises(InsufficientMemory):
        simulate_fully_mergeable(g, [[1]] * 4, kind, mu=g.max_degree + 2 * kind.budget)
    simulate_fully_mergeable(g, [[1]] * 4, kind, mu=g.max_degree + 2 * kind.budget + 1)


def test_inputs_must_match_nodes():
    with pytest.raises(InvalidParams):
        simulate_one_way(path_graph(3), [[1], [2]], make_sketch("mg", 0.25), mu=100)


# -- heavy hitters -------------------------------------------------------------------


def hh_mu(graph, eps):
    return graph.max_degree + 2 * make_sketch("mg", eps / 3).budget + 1 + 8


def test_one_label_everywhere():
    g = gnp_graph(10, 0.5, 1)
    out = exact_heavy_hitters(g, [7] * g.m, 0.5, hh_mu(g, 0.5))
    assert out.counts == {7: g.m}


def test_distinct_labels_have_no_wrong_counts():
    g = gnp_graph(10, 0.5, 2)
    labels = list(range(1, g.m + 1))
    out = exact_heavy_hitters(g, labels, 0.5, hh_mu(g, 0.5))
    assert out.counts == {}
    assert all(c == 1 for c in out.candidates.values())


def test_zipf_labels_on_gnp20():
    rng = random.Random(5)
    g = gnp_graph(20, 0.5, 5)
    labels = zipf(g.m, rng)
    out = exact_heavy_hitters(g, labels, 0.25, hh_mu(g, 0.25))
    f = Counter(labels)
    assert out.counts == {x: c for x, c in f.items() if c >= 0.25 * g.m}
    assert all(f[x] == c for x, c in out.candidates.items())


def test_edge_inputs():
    g = path_graph(3)
    assert edge_inputs(g, [5, 6]) == [[5], [6], []]
    assert edge_inputs(g, {(0, 1): 1, (1, 2): 2}) == [[1], [2], []]
    with pytest.raises(InvalidParams):
        edge_inputs(g, [1])
