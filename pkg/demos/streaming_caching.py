"""Running an edge-streaming algorithm inside the network.

On a graph with a hub, caching the stream at the hub's neighbours makes every
pass after the first cheap. On the cycle of cliques the cache does not fit in
mu = n/4 words, so only the naive re-collection runs and each pass costs the
same again.
"""

from mucongest.graphs import Graph, cycle_of_cliques, gnp_graph
from mucongest.errors import InsufficientMemory
from mucongest.streaming import EdgeCount, naive_p_pass, simulate_p_pass

n = 64
base = gnp_graph(n, 0.5, seed=5)
hub = Graph(n, set(base.edges) | {(0, v) for v in range(1, n)})
print(f"hub graph: n={n}, m={hub.m}, max degree {hub.max_degree}")
for p in (1, 2, 4, 8):
    cached = simulate_p_pass(hub, EdgeCount(p), mu=2 * n, seed=5)
    naive = naive_p_pass(hub, EdgeCount(p), mu=2 * n, seed=5)
    assert cached.result == naive.result == hub.m
    print(f"  p={p}: cached {cached.metrics.rounds_total:5} rounds, naive {naive.metrics.rounds_total:5} rounds")

g = cycle_of_cliques(24, 4)
mu = g.n // 4
print(f"\ncycle of cliques: n={g.n}, m={g.m}, mu={mu}")
try:
    simulate_p_pass(g, EdgeCount(2), mu)
except InsufficientMemory as exc:
    print(f"  cached refused: {exc}")
for p in (1, 2, 4, 8):
    run = naive_p_pass(g, EdgeCount(p), mu)
    print(f"  p={p}: naive {run.metrics.rounds_total} rounds, per pass {run.pass_rounds[-1]}")
