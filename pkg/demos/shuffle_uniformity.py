"""Random-order streams from the bucketized shuffle.

Shows the transfer matrix B, its decomposition into permutation steps, the
agreement of the distributed run with the sequential oracle, and an empirical
frequency table over the 720 orders of six items.
"""

import itertools
from collections import Counter

from mucongest.graphs import Graph, star_graph
from mucongest.shuffle import birkhoff_schedule, distributed_shuffle, sequential_shuffle

n, delta = 2, 3
buckets = [[(j, i) for i in range(n)] for j in range(delta)]
host = Graph(n * delta, star_graph(delta + 1).edges)

out = distributed_shuffle(host, 64, seed=11, bucket_size=n, buckets=buckets)
ref = sequential_shuffle(buckets, host.adj[0], seed=11)
print("B =", out.matrix.B)
print("matching steps:", birkhoff_schedule(out.matrix.B).perms)
print("stream:", out.stream, "| same as oracle:", out.slots == ref.slots)

counts = Counter(tuple(sequential_shuffle(buckets, [1, 2, 3], s).stream) for s in range(20_000))
orders = list(itertools.permutations(x for b in buckets for x in b))
seen = [counts.get(o, 0) for o in orders]
print(f"{len(counts)}/720 orders seen in 20000 draws; min {min(seen)}, max {max(seen)}, expected {20_000 / 720:.1f}")
