"""Moving multi-word payloads along fixed paths without link conflicts.

A :class:`PathSchedule` reserves, for every word, one round per hop so that
no directed link carries two words in the same round; relays hold a word for
exactly one round.  :func:`run_transfers` then replays the reservations on the
round engine.  What a word *is* and what happens when it arrives is left to a
:class:`TransferHooks` object, so the node-side computation stays in the
caller's hands while the engine checks bandwidth and memory.

Planning is bookkeeping shared by all nodes and is not charged as memory.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Hashable, Optional, Sequence

from .engine import Network, NodeProgram


@dataclass
class Transfer:
    key: Hashable
    path: Sequence[int]  # src .. dst
    length: int  # number of words
    ready: int = 1  # earliest departure round
    after: int = 0  # every word arrives strictly after this round


@dataclass
class Placement:
    transfer: Transfer
    departs: list
    arrivals: list

    @property
    def last_arrival(self) -> int:
        return self.arrivals[-1] if self.arrivals else 0


class PathSchedule:
    """Greedy earliest-slot reservation, one transfer at a time."""

    def __init__(self):
        self.used: set = set()
        self.placements: list = []

    def place(self, tr: Transfer) -> Placement:
        hops = len(tr.path) - 1
        departs, arrivals = [], []
        t = max(tr.ready, tr.after - hops + 2, 1)
        if hops == 0:
            p = Placement(tr, [], [])
            self.placements.append(p)
            return p
        links = [(tr.path[h], tr.path[h + 1]) for h in range(hops)]
        for _ in range(tr.length):
            while any((u, v, t + h) in self.used for h, (u, v) in enumerate(links)):
                t += 1
            for h, (u, v) in enumerate(links):
                self.used.add((u, v, t + h))
            departs.append(t)
            arrivals.append(t + hops - 1)
            t += 1
        p = Placement(tr, departs, arrivals)
        self.placements.append(p)
        return p

    @property
    def rounds(self) -> int:
        return max((p.last_arrival for p in self.placements), default=0)

    def arrival_log(self, node: int) -> list:
        """``(round, previous hop, key, index)`` for words ending at ``node``,
        in the order the node processes them."""
        out = []
        for p in self.placements:
            path = p.transfer.path
            if len(path) < 2 or path[-1] != node:
                continue
            for i, r in enumerate(p.arrivals):
                out.append((r, path[-2], p.transfer.key, i))
        out.sort(key=lambda x: (x[0], x[1]))
        return out


class TransferHooks:
    """Node-side behaviour for :func:`run_transfers`."""

    def produce(self, v: int, app: Any, key, idx: int):
        raise NotImplementedError

    def deliver(self, v: int, app: Any, key, idx: int, word) -> Any:
        return app

    def size(self, v: int, app: Any) -> int:
        return 0


class _Transport(NodeProgram):
    def __init__(self, schedule: PathSchedule, hooks: TransferHooks, n: int):
        self.hooks = hooks
        self.sends = defaultdict(list)  # (v, round) -> [(dst, kind, ref)]
        self.finals = {}  # (v, round, src) -> (key, idx)
        for p in schedule.placements:
            tr = p.transfer
            path = tr.path
            for i, t in enumerate(p.departs):
                self.sends[(path[0], t)].append((path[1], "own", (tr.key, i)))
                for h in range(1, len(path) - 1):
                    self.sends[(path[h], t + h)].append((path[h + 1], "fwd", path[h - 1]))
                self.finals[(path[-1], t + len(path) - 2, path[-2])] = (tr.key, i)

    def send(self, ctx, st):
        v = ctx.node
        jobs = self.sends.get((v, ctx.round))
        if not jobs:
            return st, ()
        out = {}
        for dst, kind, ref in jobs:
            if kind == "own":
                out[dst] = self.hooks.produce(v, st["app"], *ref)
            else:
                out[dst] = st["transit"].pop(ref)
        return st, out

    def receive(self, ctx, st, inbox):
        v = ctx.node
        for src, word in inbox:
            ref = self.finals.get((v, ctx.round, src))
            if ref is None:
                st["transit"][src] = word
            else:
                st["app"] = self.hooks.deliver(v, st["app"], ref[0], ref[1], word)
        return st, ()

    def size(self, st):
        return self.hooks.size(st["node"], st["app"]) + len(st["transit"])


def run_transfers(
    net: Network,
    schedule: PathSchedule,
    hooks: TransferHooks,
    apps: Sequence[Any],
    name: str = "transfer",
) -> list:
    """Replay ``schedule`` on ``net``; returns the per-node app states."""
    last = schedule.rounds
    if last == 0:
        return list(apps)
    prog = _Transport(schedule, hooks, net.n)
    states = [{"node": v, "app": apps[v], "transit": {}} for v in range(net.n)]
    res = net.run(prog, states=states, halt=lambda _n, _s, r: r >= last, name=name)
    return [st["app"] for st in res.states]


def tree_path(parent: Sequence[Optional[int]], depth: Sequence[int], a: int, b: int) -> list:
    """Nodes on the tree path from ``a`` to ``b``."""
    up, down = [a], [b]
    x, y = a, b
    while depth[x] > depth[y]:
        x = parent[x]
        up.append(x)
    while depth[y] > depth[x]:
        y = parent[y]
        down.append(y)
    while x != y:
        x, y = parent[x], parent[y]
        up.append(x)
        down.append(y)
    return up + down[-2::-1]
