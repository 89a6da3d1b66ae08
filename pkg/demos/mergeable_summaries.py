"""Merging sketches across a network at the three mergeability levels.

Edges carry Zipf-distributed labels; each level aggregates a sketch of all
labels at one node, and exact heavy hitters follow from a Misra-Gries pass.
"""

import random
from collections import Counter

from mucongest.graphs import gnp_graph
from mucongest.mergeable import (
    edge_inputs,
    exact_heavy_hitters,
    simulate_composable,
    simulate_fully_mergeable,
    simulate_one_way,
)
from mucongest.sketches import make_sketch

rng = random.Random(3)
g = gnp_graph(40, 0.2, seed=3)
labels = rng.choices(range(1, 21), [1 / k**1.2 for k in range(1, 21)], k=g.m)
inputs = edge_inputs(g, labels)
truth = Counter(labels)
print(f"gnp(40, 0.2): {g.m} labelled edges, top labels {truth.most_common(3)}")

for name, sim in (("one-way", simulate_one_way), ("fully mergeable", simulate_fully_mergeable)):
    kind = make_sketch("mg", 0.1, g.m)
    mu = g.max_degree + 2 * kind.budget + 1
    run = sim(g, inputs, kind, mu=mu)
    worst = max(truth[x] - run.result.estimate(x) for x in truth)
    print(f"{name:>16}: {run.metrics.rounds_total:4} rounds, worst undercount {worst} <= {0.1 * g.m:.1f}")

kind = make_sketch("linfreq", 0.25)
mu = g.max_degree + 2 * kind.budget + 1
run = simulate_composable(g, inputs, kind, mu=mu)
print(f"{'composable':>16}: {run.metrics.rounds_total:4} rounds, equals central sketch: {run.result == kind.summarize(labels)}")

hh = exact_heavy_hitters(g, labels, 0.1, mu=g.max_degree + 2 * make_sketch('mg', 0.1 / 3).budget + 9)
print("heavy hitters (f >= 0.1 m):", hh.counts)
