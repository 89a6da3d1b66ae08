"""Command-line entry point.

Scenario commands read a JSON scenario file::

    mucongest run scenario.json      # metrics CSV, one row per (mu, seed)
    mucongest bounds scenario.json   # bound table per mu
    mucongest verify scenario.json   # invariant checks per cell

Single-run commands take a graph as an edge-list path or a generator spec
such as ``gnp:n=32,p=0.5``.  Files go to ``$MUCONGEST_OUT`` (default
``mucongest-out``).  Exit codes: 0 ok, 2 invariant failure, 3 config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bounds import BoundParams, compute_bounds
from .errors import InvalidParams, InvalidSpec
from .graphs import GraphSpec
from .scenario import Scenario, make_inputs, rows_to_csv, run_cell, run_sweep
from .sketches import make_sketch

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 2, 3
OUT_ENV = "MUCONGEST_OUT"


def out_dir() -> Path:
    d = Path(os.environ.get(OUT_ENV, "mucongest-out"))
    d.mkdir(parents=True, exist_ok=True)
    return d


def parse_graph(text: str):
    """``kind:key=value,...`` becomes a generator dict; anything else is a path."""
    kind, sep, rest = text.partition(":")
    if not sep or kind not in GraphSpec.KINDS:
        return text
    spec = {"kind": kind}
    for part in filter(None, rest.split(",")):
        key, eq, value = part.partition("=")
        if not eq:
            raise InvalidSpec(f"graph option {part!r} is not key=value")
        spec[key.strip()] = value.strip() if key.strip() == "path" else _number(value)
    return spec


def _number(value: str):
    try:
        return int(value)
    except ValueError:
        try:
            return float(value)
        except ValueError:
            raise InvalidSpec(f"{value!r} is not a number") from None


def _exit_code(results) -> int:
    if any(r.config_error for r in results):
        return EXIT_CONFIG
    if any(r.failed for r in results):
        return EXIT_INVARIANT
    return EXIT_OK


def _print_failures(results) -> None:
    for r in results:
        for name, passed, detail in r.checks:
            if not passed:
                print(f"[mu={r.row['mu']} seed={r.row['seed']}] {name}: {detail}", file=sys.stderr)


# ---------------------------------------------------------------------------
# scenario commands


def cmd_run(args) -> int:
    sc = Scenario.load(args.scenario)
    results = run_sweep(sc, jobs=args.jobs)
    text = rows_to_csv(results)
    path = out_dir() / f"{sc.name}.csv"
    path.write_text(text)
    sys.stdout.write(text)
    print(f"wrote {path}", file=sys.stderr)
    _print_failures(results)
    return _exit_code(results)


def bound_params(sc: Scenario, mu: int, seed: int) -> BoundParams:
    """Bound inputs for one cell, taken from the scenario and its graph."""
    graph = sc.build_graph(seed)
    p = sc.algorithm_params
    kw = dict(n=graph.n, mu=mu, delta=max(graph.max_degree, 1))
    if sc.algorithm == "list_kcliques":
        kw.update(k=int(p.get("k", 3)), model="all_to_all")
    if sc.algorithm == "stream":
        kw["passes"] = int(p.get("stream_params", {}).get("passes", p.get("passes", 1)))
    if sc.algorithm in ("merge", "heavy_hitters"):
        inputs = make_inputs(graph, p, seed, sc.base_dir)
        total = sum(map(len, inputs))
        kind = make_sketch(p.get("sketch", "mg"), float(p.get("epsilon", 0.25)), total)
        kw.update(M=int(p.get("M", kind.budget)), items=max(total, 1), diameter=graph.diameter())
    return BoundParams(**kw)


def cmd_bounds(args) -> int:
    sc = Scenario.load(args.scenario)
    seed = sc.seed[0] if sc.seed else 0
    rows = []
    for mu in sorted(sc.mu):
        table = compute_bounds(bound_params(sc, mu, seed))
        rows.append({"scenario": sc.name, "mu": mu, "seed": seed, **table.as_dict()})
    print(json.dumps(rows, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    sc = Scenario.load(args.scenario)
    results = run_sweep(sc, jobs=args.jobs)
    for r in results:
        tag = f"mu={r.row['mu']} seed={r.row['seed']}"
        if not r.checks:
            print(f"SKIP {tag}: {r.row['status']}")
        for name, passed, detail in r.checks:
            print(f"{'PASS' if passed else 'FAIL'} {tag} {name}" + (f" ({detail})" if detail else ""))
    return _exit_code(results)


# ---------------------------------------------------------------------------
# single runs


def _single(args, algorithm: str, params: dict) -> Scenario:
    return Scenario.from_dict(
        {
            "name": args.name or algorithm,
            "graph": parse_graph(args.graph),
            "algorithm": algorithm,
            "algorithm_params": params,
            "mu": [args.mu],
            "seed": [args.seed],
            "round_cap": args.round_cap,
        },
        base_dir=Path.cwd(),
    )


def _finish(sc: Scenario, cell, report: dict, suffix: str) -> int:
    d = out_dir()
    (d / f"{sc.name}.csv").write_text(rows_to_csv([cell]))
    path = d / f"{sc.name}.{suffix}"
    if suffix == "json":
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(json.dumps({k: cell.row[k] for k in ("status", "rounds", "max_words")}))
    print(f"wrote {path}", file=sys.stderr)
    _print_failures([cell])
    return _exit_code([cell])


def cmd_list_cliques(args) -> int:
    sc = _single(args, "list_kcliques", {"k": args.k})
    cell = run_cell(sc, args.mu, args.seed)
    path = out_dir() / f"{sc.name}.cliques"
    cliques = cell.report.get("cliques", [])
    path.write_text("".join(" ".join(map(str, c)) + "\n" for c in cliques))
    return _finish(sc, cell, {}, "cliques")


def cmd_stream_sim(args) -> int:
    params = {"stream_algorithm": args.algorithm, "mode": args.mode, "stream_params": {}}
    if args.passes is not None:
        params["stream_params"]["passes"] = args.passes
    sc = _single(args, "stream", params)
    cell = run_cell(sc, args.mu, args.seed)
    report = {**cell.report, "rounds": cell.row["rounds"], "max_words": cell.row["max_words"]}
    return _finish(sc, cell, report, "json")


def cmd_shuffle_test(args) -> int:
    params = {} if args.bucket_size is None else {"bucket_size": args.bucket_size}
    sc = _single(args, "shuffle", params)
    cell = run_cell(sc, args.mu, args.seed)
    report = {**cell.report, "checks": [c[:2] for c in cell.checks], "rounds": cell.row["rounds"]}
    return _finish(sc, cell, report, "json")


def _label_source(args) -> dict:
    if args.labels:
        return {"kind": "file", "path": args.labels}
    return {"kind": args.label_gen}


def cmd_merge_sim(args) -> int:
    params = {"level": args.level, "sketch": args.sketch, "epsilon": args.epsilon, "labels": _label_source(args)}
    if args.M is not None:
        params["M"] = args.M
    sc = _single(args, "merge", params)
    cell = run_cell(sc, args.mu, args.seed)
    report = {
        "result": cell.report.get("result"),
        "rounds": cell.row["rounds"],
        "max_words": cell.row["max_words"],
        "status": cell.row["status"],
    }
    return _finish(sc, cell, report, "json")


def cmd_heavy_hitters(args) -> int:
    params = {"epsilon": args.epsilon, "labels": _label_source(args)}
    sc = _single(args, "heavy_hitters", params)
    cell = run_cell(sc, args.mu, args.seed)
    report = {**cell.report, "rounds": cell.row["rounds"], "max_words": cell.row["max_words"]}
    return _finish(sc, cell, report, "json")


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage mistakes are config errors, not invariant failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mucongest", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, fn, helptext in (
        ("run", cmd_run, "run a scenario sweep and write its metrics CSV"),
        ("bounds", cmd_bounds, "print the bound table for a scenario"),
        ("verify", cmd_verify, "run a scenario and report every invariant check"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("scenario")
        if name != "bounds":
            p.add_argument("--jobs", type=int, default=1)
        p.set_defaults(func=fn)

    def single(name, fn, helptext):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--graph", required=True, help="edge-list path or e.g. gnp:n=32,p=0.5")
        p.add_argument("--mu", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--name", default=None, help="output file stem")
        p.add_argument("--round-cap", type=int, default=1_000_000)
        p.set_defaults(func=fn)
        return p

    p = single("list-cliques", cmd_list_cliques, "list k-cliques on the all-to-all network")
    p.add_argument("--k", type=int, default=3)

    p = single("stream-sim", cmd_stream_sim, "simulate a multi-pass streaming algorithm")
    p.add_argument("--algorithm", default="edge_count")
    p.add_argument("--mode", choices=("cached", "naive", "random_order"), default="cached")
    p.add_argument("--passes", type=int, default=None)

    p = single("shuffle-test", cmd_shuffle_test, "shuffle cached edges and compare with the sequential draw")
    p.add_argument("--bucket-size", type=int, default=None)

    for name, fn, helptext in (
        ("merge-sim", cmd_merge_sim, "merge per-node summaries into one"),
        ("heavy-hitters", cmd_heavy_hitters, "exact counts of frequent edge labels"),
    ):
        p = single(name, fn, helptext)
        p.add_argument("--epsilon", type=float, default=0.25)
        p.add_argument("--labels", default=None, help="file with 'u v label' lines")
        p.add_argument("--label-gen", choices=("zipf", "uniform", "node_id"), default="zipf")
        if name == "merge-sim":
            p.add_argument("--level", choices=("oneway", "full", "composable"), default="full")
            p.add_argument("--sketch", choices=("gk", "mg", "linfreq"), default="mg")
            p.add_argument("--M", type=int, default=None, help="summary size budget in words")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidSpec, InvalidParams) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
