"""Scenario files, parameter sweeps and the metrics CSV.

A scenario is a JSON object::

    {"name": "tri48", "graph": {"kind": "gnp", "n": 48, "p": 0.5},
     "algorithm": "list_kcliques", "algorithm_params": {"k": 3},
     "mu": [48, 192], "seed": [0, 1, 2], "round_cap": 1000000}

``graph`` may also be a path to an edge-list file.  Without a ``seed`` in
the graph spec, each cell's seed also seeds the graph.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import cliques, mergeable, shuffle, streaming
from .bounds import BoundParams, compute_bounds
from .engine import DEFAULT_ROUND_CAP, MetricsRecord, Network, alg_rng
from .errors import InvalidParams, InvalidSpec, NotComposable, SimulationError
from .graphs import Graph, GraphSpec, generate_with_seed, read_edge_list
from .sketches import GKQuantileSummary, LinearFreqSketch, MGSummary, make_sketch

METRIC_COLUMNS = ["scenario", "n", "m", "delta", "mu", "rounds", "max_words", "words_sent", "outputs"]
EXTRA_COLUMNS = ["seed", "status", "bound", "bound_value", "ratio"]
HEADER = METRIC_COLUMNS + EXTRA_COLUMNS

ALGORITHMS = ("list_kcliques", "stream", "shuffle", "merge", "heavy_hitters")
LEVELS = {"oneway": "one_way", "one_way": "one_way", "full": "full", "composable": "composable"}


def _as_list(x) -> list:
    if x is None:
        return []
    return list(x) if isinstance(x, (list, tuple)) else [x]


@dataclass
class Scenario:
    name: str
    graph: object  # GraphSpec-like dict or edge-list path
    algorithm: str
    algorithm_params: dict = field(default_factory=dict)
    mu: list = field(default_factory=list)
    seed: list = field(default_factory=lambda: [0])
    round_cap: int = DEFAULT_ROUND_CAP
    base_dir: Optional[Path] = None

    @classmethod
    def from_dict(cls, d: dict, base_dir: Optional[Path] = None) -> "Scenario":
        if not isinstance(d, dict):
            raise InvalidSpec("a scenario must be a JSON object")
        missing = [k for k in ("graph", "algorithm") if k not in d]
        if missing:
            raise InvalidSpec(f"scenario lacks {missing}")
        sc = cls(
            name=str(d.get("name", "scenario")),
            graph=d["graph"],
            algorithm=d["algorithm"],
            algorithm_params=dict(d.get("algorithm_params", {})),
            mu=_as_list(d.get("mu")),
            seed=_as_list(d.get("seed", 0)),
            round_cap=int(d.get("round_cap", DEFAULT_ROUND_CAP)),
            base_dir=base_dir,
        )
        sc.validate()
        return sc

    @classmethod
    def load(cls, path) -> "Scenario":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidSpec(f"cannot read scenario {path}: {exc}") from None
        return cls.from_dict(data, path.parent)

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise InvalidSpec(f"unknown algorithm {self.algorithm!r}; choose from {list(ALGORITHMS)}")
        for mu in self.mu:
            if not isinstance(mu, int) or mu < 1:
                raise InvalidSpec(f"mu values must be positive integers, got {mu!r}")
        for s in self.seed:
            if not isinstance(s, int):
                raise InvalidSpec(f"seeds must be integers, got {s!r}")
        if self.round_cap < 1:
            raise InvalidSpec("round_cap must be positive")
        if isinstance(self.graph, dict):
            GraphSpec.from_dict({**self.graph, "seed": self.graph.get("seed", 0)}).validate()
        elif not isinstance(self.graph, str):
            raise InvalidSpec("graph must be a generator object or an edge-list path")

    def build_graph(self, seed: int) -> Graph:
        if isinstance(self.graph, str):
            path = Path(self.graph)
            if self.base_dir is not None and not path.is_absolute():
                path = self.base_dir / path
            return read_edge_list(path)
        spec = dict(self.graph)
        spec.setdefault("seed", seed)
        if spec.get("kind") == "file" and self.base_dir is not None:
            path = Path(spec["path"])
            if not path.is_absolute():
                spec["path"] = str(self.base_dir / path)
        return generate_with_seed(GraphSpec.from_dict(spec)).graph

    def cells(self) -> list:
        return [(mu, seed) for mu in sorted(self.mu) for seed in sorted(self.seed)]


# ---------------------------------------------------------------------------
# labels for the merging algorithms


def zipf_labels(count: int, rng: random.Random, s: float = 1.2, max_label: int = 30) -> list:
    weights = [1 / (k**s) for k in range(1, max_label + 1)]
    return rng.choices(range(1, max_label + 1), weights, k=count)


def read_label_file(path, graph: Graph) -> dict:
    """``u v label`` per line; every listed pair must be an edge."""
    labels = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InvalidSpec(f"{path}:{lineno}: expected 'u v label'")
        try:
            u, v, label = map(int, parts)
        except ValueError:
            raise InvalidSpec(f"{path}:{lineno}: non-integer field") from None
        e = (min(u, v), max(u, v))
        if not graph.has_edge(*e):
            raise InvalidSpec(f"{path}:{lineno}: ({u}, {v}) is not an edge")
        labels[e] = label
    missing = [e for e in graph.edges if e not in labels]
    if missing:
        raise InvalidSpec(f"{path}: no label for edge {missing[0]}")
    return labels


def make_labels(graph: Graph, params: dict, seed: int, base_dir: Optional[Path] = None):
    """Edge labels from ``params['labels']``, or ``None`` for ``node_id``.

    Sources: ``{"kind": "zipf", "s", "max"}``, ``{"kind": "uniform", "max"}``,
    ``{"kind": "file", "path"}`` (one label per edge) and ``{"kind": "node_id"}``
    (node ``v`` holds the single item ``v + 1``).
    """
    src = dict(params.get("labels", {"kind": "zipf"}))
    kind = src.pop("kind", "zipf")
    rng = alg_rng(seed, "labels")
    if kind == "node_id":
        return None
    if kind == "file":
        path = Path(src["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return read_label_file(path, graph)
    if kind == "zipf":
        labels = zipf_labels(graph.m, rng, src.get("s", 1.2), src.get("max", 30))
    elif kind == "uniform":
        labels = [rng.randint(1, src.get("max", 30)) for _ in range(graph.m)]
    else:
        raise InvalidSpec(f"unknown label source {kind!r}")
    return dict(zip(graph.edges, labels))


def make_inputs(graph: Graph, params: dict, seed: int, base_dir: Optional[Path] = None) -> list:
    """Per-node input lists; an edge label is held by the lower endpoint."""
    labels = make_labels(graph, params, seed, base_dir)
    if labels is None:
        return [[v + 1] for v in range(graph.n)]
    return mergeable.edge_inputs(graph, labels)


def describe_summary(summary) -> dict:
    """JSON-friendly view of a merged summary."""
    if isinstance(summary, MGSummary):
        return {"m": summary.m, "counters": {str(k): v for k, v in sorted(summary.counters.items())}}
    if isinstance(summary, GKQuantileSummary):
        if summary.m == 0:
            return {"m": 0, "quantiles": {}}
        qs = {f"{q:.2f}": summary.query(max(1, math.ceil(q * summary.m))) for q in (0.1, 0.25, 0.5, 0.75, 0.9, 1.0)}
        return {"m": summary.m, "quantiles": qs}
    if isinstance(summary, LinearFreqSketch):
        return {"m": summary.m, "moduli": summary.moduli}
    return {"value": repr(summary)}


# ---------------------------------------------------------------------------
# one cell


@dataclass
class CellResult:
    row: dict
    checks: list  # (name, passed, detail)
    report: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.row["status"] == "ok" and all(c[1] for c in self.checks)

    @property
    def config_error(self) -> bool:
        return self.row["status"] in CONFIG_ERRORS

    @property
    def failed(self) -> bool:
        """An invariant broke; a declared memory refusal does not count."""
        return not self.ok and not self.config_error and self.row["status"] != "InsufficientMemory"


CONFIG_ERRORS = ("InvalidParams", "InvalidSpec", "NotComposable")


def _network(sc: Scenario, graph: Graph, mu: int, seed: int, **kw) -> Network:
    return Network(graph, mu, seed, round_cap=sc.round_cap, **kw)


def _run_listing(sc, graph, mu, seed, params):
    k = int(params.get("k", 3))
    net = _network(sc, graph, mu, seed, topology="clique")
    res = cliques.list_kcliques_all_to_all(graph, k, mu, seed, net=net)
    truth = cliques.brute_force_cliques(graph, k)
    checks = [("cliques match brute force", res.cliques == truth, f"{len(res.cliques)} vs {len(truth)}")]
    bound = compute_bounds(BoundParams(n=graph.n, mu=mu, k=k, model="all_to_all"))
    report = {"cliques": sorted(res.cliques)}
    return res.metrics, checks, ("ub_listing", bound.ub_listing), report


def _run_stream(sc, graph, mu, seed, params):
    name = params.get("stream_algorithm", "edge_count")
    mode = params.get("mode", "cached")
    alg_params = dict(params.get("stream_params", {}))
    alg = streaming.make_algorithm(name, graph, **alg_params)
    if mode == "cached":
        run = streaming.simulate_p_pass(graph, alg, mu, seed, net=_network(sc, graph, mu, seed))
    elif mode == "naive":
        run = streaming.naive_p_pass(graph, alg, mu, seed, net=_network(sc, graph, mu, seed))
    elif mode == "random_order":
        run = shuffle.random_order_p_pass(graph, alg, mu, seed)
    else:
        raise InvalidSpec(f"unknown stream mode {mode!r}")
    oracle = streaming.make_algorithm(name, graph, **alg_params)
    expected, _ = streaming.run_centrally(oracle, run.pass_items)
    edges = sorted(graph.edges)
    checks = [
        ("result matches central run", run.result == expected, f"{run.result!r} vs {expected!r}"),
        (
            "every pass streams each edge once",
            all(sorted(items) == edges for items in run.pass_items),
            f"{run.passes} passes",
        ),
    ]
    bound = compute_bounds(BoundParams(n=graph.n, mu=mu, delta=graph.max_degree, passes=run.passes))
    which = "stream_lb" if mode == "naive" else "stream_ub"
    report = {"result": repr(run.result), "passes": run.passes, "pass_rounds": run.pass_rounds}
    return run.metrics, checks, (which, getattr(bound, which)), report


def _run_shuffle(sc, graph, mu, seed, params):
    size = params.get("bucket_size")
    out = shuffle.distributed_shuffle(graph, mu, seed, bucket_size=size, net=_network(sc, graph, mu, seed))
    holders = list(graph.adj[streaming.simulator_node(graph)])
    start = shuffle.pad_buckets(list(graph.edges), holders, graph.n if size is None else size)
    oracle = shuffle.sequential_shuffle(start, holders, seed)
    checks = [("matches sequential oracle", oracle.stream == out.stream, f"{len(out.stream)} items")]
    return out.metrics, checks, ("", None), {"items": len(out.stream)}


def _merge_checks(run, inputs, kind) -> list:
    items = [x for xs in inputs for x in xs]
    m = len(items)
    res = run.result
    checks = [("summary counts every item", res.m == m, f"{res.m} vs {m}")]
    if isinstance(res, MGSummary):
        f = Counter(items)
        ok = all(0 <= f[x] - res.estimate(x) <= res.eps * m for x in set(f) | set(res.counters))
        checks.append(("frequency error within eps*m", ok, ""))
    elif isinstance(res, GKQuantileSummary) and m:
        data = sorted(items)
        ok = True
        for r in range(1, m + 1):
            v = res.query(r)
            lo = sum(1 for x in data if x < v) + 1
            hi = sum(1 for x in data if x <= v)
            ok &= hi >= r - res.eps * m and lo <= r + res.eps * m
        checks.append(("rank error within eps*m", ok, ""))
    elif isinstance(res, LinearFreqSketch):
        whole = kind.summarize(items)
        checks.append(("sketch equals sketch of all items", res == whole, ""))
    return checks


def _run_merge(sc, graph, mu, seed, params):
    level = LEVELS.get(params.get("level", "full"))
    if level is None:
        raise InvalidSpec(f"unknown merge level {params.get('level')!r}")
    inputs = make_inputs(graph, params, seed, sc.base_dir)
    total = sum(map(len, inputs))
    kind = make_sketch(params.get("sketch", "mg"), float(params.get("epsilon", 0.25)), total)
    M = int(params.get("M", kind.budget))
    net = _network(sc, graph, mu, seed)
    if level == "one_way":
        run = mergeable.simulate_one_way(graph, inputs, kind, M, mu, seed, net=net)
        replay = mergeable.one_way_oracle(inputs, kind, run.plan, run.arrivals, run.fold_order)
        which = "oneway_ub"
    elif level == "full":
        run = mergeable.simulate_fully_mergeable(graph, inputs, kind, M, mu, seed, net=net)
        replay = mergeable.replay_merge_log(inputs, kind, run.merge_log)
        which = "full_ub"
    else:
        run = mergeable.simulate_composable(graph, inputs, kind, M, mu, seed, net=net)
        replay = mergeable.replay_merge_log(inputs, kind, run.merge_log)
        which = "comp_ub"
    checks = [("matches central replay", replay == run.result, "")] + _merge_checks(run, inputs, kind)
    bound = compute_bounds(
        BoundParams(
            n=graph.n, mu=mu, delta=graph.max_degree, M=M, items=max(total, 1),
            diameter=graph.diameter() if graph.n > 1 else 0,
        )
    )
    report = {"result": describe_summary(run.result), "stages": run.stages, "M": M}
    return run.metrics, checks, (which, getattr(bound, which)), report


def _run_heavy(sc, graph, mu, seed, params):
    eps = float(params.get("epsilon", 0.25))
    labels = make_labels(graph, params, seed, sc.base_dir)
    if labels is None:
        raise InvalidSpec("heavy_hitters needs edge labels")
    flat = list(labels.values())
    out = mergeable.exact_heavy_hitters(graph, labels, eps, mu, seed, net=_network(sc, graph, mu, seed))
    f = Counter(flat)
    m = len(flat)
    want = {x: c for x, c in f.items() if c >= eps * m}
    checks = [("exact counts of frequent labels", out.counts == want, f"{out.counts} vs {want}")]
    return out.metrics, checks, ("", None), {"counts": {str(k): v for k, v in sorted(out.counts.items())}}


RUNNERS = {
    "list_kcliques": _run_listing,
    "stream": _run_stream,
    "shuffle": _run_shuffle,
    "merge": _run_merge,
    "heavy_hitters": _run_heavy,
}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def run_cell(sc: Scenario, mu: int, seed: int) -> CellResult:
    """Run one (mu, seed) cell; errors are recorded in the row's status."""
    graph = sc.build_graph(seed)
    row = {
        "scenario": sc.name, "n": graph.n, "m": graph.m, "delta": graph.max_degree, "mu": mu,
        "rounds": "", "max_words": "", "words_sent": "", "outputs": "",
        "seed": seed, "status": "ok", "bound": "", "bound_value": "", "ratio": "",
    }
    try:
        metrics, checks, (bound_name, bound_value), report = RUNNERS[sc.algorithm](
            sc, graph, mu, seed, sc.algorithm_params
        )
    except (SimulationError, InvalidParams, InvalidSpec, NotComposable) as exc:
        row["status"] = type(exc).__name__
        return CellResult(row, [("run completes", False, str(exc))])
    assert isinstance(metrics, MetricsRecord)
    d = metrics.as_dict()
    row.update({k: d[k] for k in ("rounds", "max_words", "words_sent", "outputs")})
    checks.append(("memory within mu", d["max_words"] <= mu, f"{d['max_words']} <= {mu}"))
    if bound_value:
        row["bound"] = bound_name
        row["bound_value"] = _fmt(bound_value)
        row["ratio"] = _fmt(d["rounds"] / bound_value)
    if not all(c[1] for c in checks):
        row["status"] = "check_failed"
    return CellResult(row, checks, report)


def _cell_job(args):
    sc, mu, seed = args
    return run_cell(sc, mu, seed)


def run_sweep(sc: Scenario, jobs: int = 1) -> list:
    """Run every (mu, seed) cell; results sorted by (scenario, mu, seed)."""
    cells = sc.cells()
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_job, [(sc, mu, s) for mu, s in cells]))
    else:
        results = [run_cell(sc, mu, s) for mu, s in cells]
    results.sort(key=lambda r: (r.row["scenario"], r.row["mu"], r.row["seed"]))
    return results


def rows_to_csv(results) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=HEADER, lineterminator="\n")
    writer.writeheader()
    for r in results:
        writer.writerow({k: _fmt(r.row[k]) for k in HEADER})
    return buf.getvalue()
