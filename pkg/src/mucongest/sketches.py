"""Mergeable streaming summaries.

All three are plain value types: ``insert`` streams one item in place,
``merged`` combines two summaries into a new one, and ``to_words`` /
``from_words`` give the wire encoding the network simulations move around.
Only :class:`LinearFreqSketch` supports word-aligned streaming composition.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import InvalidParams, NotComposable

ONE_WAY, FULLY_MERGEABLE, COMPOSABLE = "one_way", "fully_mergeable", "composable"
LEVELS = (ONE_WAY, FULLY_MERGEABLE, COMPOSABLE)


def _check_eps(eps: float) -> None:
    if not 0 < eps < 1:
        raise InvalidParams(f"epsilon must lie in (0, 1), got {eps}")


# ---------------------------------------------------------------------------
# Greenwald-Khanna quantiles


class GKQuantileSummary:
    """Tuples ``(value, g, d)`` sorted by value.

    ``rmin_i`` is the prefix sum of ``g`` and ``rmax_i = rmin_i + d_i``; the
    true rank of the item behind tuple ``i`` lies in ``[rmin_i, rmax_i]``.
    The summary keeps ``g_i + d_i <= 2*eps*m`` for every tuple, which is what
    makes every rank query accurate to ``eps*m``.  The first and last tuples
    are the exact minimum and maximum.
    """

    level = FULLY_MERGEABLE

    def __init__(self, eps: float, tuples: Optional[list] = None, m: int = 0):
        _check_eps(eps)
        self.eps = eps
        self.tuples: list = tuples if tuples is not None else []
        self.m = m

    def copy(self) -> "GKQuantileSummary":
        return GKQuantileSummary(self.eps, list(self.tuples), self.m)

    def __eq__(self, other):
        return (
            isinstance(other, GKQuantileSummary)
            and self.eps == other.eps
            and self.m == other.m
            and self.tuples == other.tuples
        )

    def __repr__(self):
        return f"GKQuantileSummary(eps={self.eps}, m={self.m}, tuples={len(self.tuples)})"

    def _threshold(self) -> float:
        return 2 * self.eps * self.m

    def insert(self, x: int) -> None:
        values = [t[0] for t in self.tuples]
        i = bisect.bisect_right(values, x)
        if i == 0 or i == len(self.tuples):
            new = (x, 1, 0)
        else:
            _, g, d = self.tuples[i]
            new = (x, 1, g + d - 1)
        self.tuples.insert(i, new)
        self.m += 1
        self.compress()

    def compress(self) -> None:
        """Fold tuple ``i`` into ``i + 1`` wherever the band condition allows."""
        limit = self._threshold()
        ts = self.tuples
        i = len(ts) - 2
        while i >= 1:
            _, g, _ = ts[i]
            v1, g1, d1 = ts[i + 1]
            if g + g1 + d1 <= limit:
                ts[i + 1] = (v1, g + g1, d1)
                del ts[i]
            i -= 1

    def rank_bounds(self) -> list:
        out, rmin = [], 0
        for v, g, d in self.tuples:
            rmin += g
            out.append((v, rmin, rmin + d))
        return out

    def query(self, r: int) -> int:
        """A value whose rank is within ``eps*m`` of ``r`` (1-based)."""
        if self.m == 0:
            raise InvalidParams("query on an empty summary")
        limit = r + self.eps * self.m
        bounds = self.rank_bounds()
        for i, (_, _, rmax) in enumerate(bounds):
            if rmax > limit:
                return bounds[max(i - 1, 0)][0]
        return bounds[-1][0]

    def merged(self, other: "GKQuantileSummary") -> "GKQuantileSummary":
        """Combine two summaries; ties order ``self``'s items first."""
        if self.eps != other.eps:
            raise InvalidParams("cannot merge summaries with different epsilon")
        if other.m == 0:
            return self.copy()
        if self.m == 0:
            return other.copy()
        a, b = self.rank_bounds(), other.rank_bounds()
        a_vals, b_vals = [t[0] for t in a], [t[0] for t in b]
        rows = []
        for v, rmin, rmax in a:
            j = bisect.bisect_left(b_vals, v)  # b items strictly below v
            lo = b[j - 1][1] if j > 0 else 0
            hi = b[j][2] - 1 if j < len(b) else other.m
            rows.append(((v, 0), rmin + lo, rmax + hi))
        for v, rmin, rmax in b:
            j = bisect.bisect_right(a_vals, v)  # a items at or below v
            lo = a[j - 1][1] if j > 0 else 0
            hi = a[j][2] - 1 if j < len(a) else self.m
            rows.append(((v, 1), rmin + lo, rmax + hi))
        rows.sort(key=lambda r: r[0])
        tuples, prev = [], 0
        for (v, _), rmin, rmax in rows:
            tuples.append((v, rmin - prev, rmax - rmin))
            prev = rmin
        out = GKQuantileSummary(self.eps, tuples, self.m + other.m)
        out.compress()
        return out

    def word_count(self) -> int:
        return 1 + 3 * len(self.tuples)

    def to_words(self) -> list:
        words = [self.m]
        for t in self.tuples:
            words.extend(t)
        return words

    @classmethod
    def from_words(cls, eps: float, words: Sequence[int]) -> "GKQuantileSummary":
        m = words[0]
        body = list(words[1:])
        tuples = [tuple(body[i : i + 3]) for i in range(0, len(body), 3)]
        return cls(eps, tuples, m)

    @staticmethod
    def budget(eps: float, m: int) -> int:
        """Word budget: the classic GK space bound ``(11/(2 eps)) log(2 eps m)``."""
        cap = math.ceil(11 / (2 * eps) * math.log2(2 * eps * max(m, 1) + 2))
        return 1 + 3 * cap


# ---------------------------------------------------------------------------
# Misra-Gries heavy hitters


class MGSummary:
    """At most ``ceil(1/eps)`` (label, counter) pairs.

    Estimates never exceed the true frequency and undercount by at most
    ``eps*m``; merging adds counters and subtracts the first counter that
    does not fit.
    """

    level = FULLY_MERGEABLE

    def __init__(self, eps: float, counters: Optional[dict] = None, m: int = 0):
        _check_eps(eps)
        self.eps = eps
        self.capacity = math.ceil(1 / eps)
        self.counters: dict = counters if counters is not None else {}
        self.m = m

    def copy(self) -> "MGSummary":
        return MGSummary(self.eps, dict(self.counters), self.m)

    def __eq__(self, other):
        return (
            isinstance(other, MGSummary)
            and self.eps == other.eps
            and self.m == other.m
            and sorted(self.counters.items()) == sorted(other.counters.items())
        )

    def __repr__(self):
        return f"MGSummary(eps={self.eps}, m={self.m}, counters={dict(sorted(self.counters.items()))})"

    def insert(self, x: int) -> None:
        self.m += 1
        c = self.counters
        if x in c:
            c[x] += 1
        elif len(c) < self.capacity:
            c[x] = 1
        else:
            for key in list(c):
                c[key] -= 1
                if c[key] == 0:
                    del c[key]

    def estimate(self, x: int) -> int:
        return self.counters.get(x, 0)

    def merged(self, other: "MGSummary") -> "MGSummary":
        if self.eps != other.eps:
            raise InvalidParams("cannot merge summaries with different epsilon")
        total = dict(self.counters)
        for key, cnt in other.counters.items():
            total[key] = total.get(key, 0) + cnt
        if len(total) > self.capacity:
            cut = sorted(total.values(), reverse=True)[self.capacity]
            total = {k: v - cut for k, v in total.items() if v > cut}
        return MGSummary(self.eps, total, self.m + other.m)

    def word_count(self) -> int:
        return 1 + 2 * len(self.counters)

    def to_words(self) -> list:
        words = [self.m]
        for key, cnt in sorted(self.counters.items()):
            words.extend((key, cnt))
        return words

    @classmethod
    def from_words(cls, eps: float, words: Sequence[int]) -> "MGSummary":
        body = list(words[1:])
        return cls(eps, {body[i]: body[i + 1] for i in range(0, len(body), 2)}, words[0])

    @staticmethod
    def budget(eps: float, m: int = 0) -> int:
        return 1 + 2 * math.ceil(1 / eps)


# ---------------------------------------------------------------------------
# deterministic linear frequency sketch


def primes_from(w: int, count: int) -> list:
    out, x = [], max(w, 2)
    while len(out) < count:
        if all(x % p for p in range(2, math.isqrt(x) + 1)):
            out.append(x)
        x += 1
    return out


class LinearFreqSketch:
    """Rows of counters indexed by ``label mod q`` for distinct primes ``q``.

    The sketch of a union is the entrywise sum of the sketches, so it can be
    merged by streaming aligned counters.  Point estimates take the minimum
    over rows and never undercount.
    """

    level = COMPOSABLE

    def __init__(self, eps: float, rows: int = 3, table: Optional[list] = None):
        _check_eps(eps)
        self.eps = eps
        self.moduli = primes_from(math.ceil(4 / eps), rows)
        self.table = table if table is not None else [[0] * q for q in self.moduli]

    def copy(self) -> "LinearFreqSketch":
        return LinearFreqSketch(self.eps, len(self.moduli), [list(r) for r in self.table])

    def __eq__(self, other):
        return isinstance(other, LinearFreqSketch) and self.moduli == other.moduli and self.table == other.table

    def __repr__(self):
        return f"LinearFreqSketch(eps={self.eps}, moduli={self.moduli}, m={self.m})"

    @property
    def m(self) -> int:
        return sum(self.table[0])

    def insert(self, x: int, count: int = 1) -> None:
        for row, q in zip(self.table, self.moduli):
            row[x % q] += count

    def estimate(self, x: int) -> int:
        return min(row[x % q] for row, q in zip(self.table, self.moduli))

    def merged(self, other: "LinearFreqSketch") -> "LinearFreqSketch":
        if self.moduli != other.moduli:
            raise InvalidParams("cannot merge sketches with different moduli")
        table = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.table, other.table)]
        return LinearFreqSketch(self.eps, len(self.moduli), table)

    def word_count(self) -> int:
        return sum(self.moduli)

    def to_words(self) -> list:
        return [c for row in self.table for c in row]

    @classmethod
    def from_words(cls, eps: float, words: Sequence[int], rows: int = 3) -> "LinearFreqSketch":
        out = cls(eps, rows)
        it = iter(words)
        out.table = [[next(it) for _ in range(q)] for q in out.moduli]
        return out

    @staticmethod
    def budget(eps: float, m: int = 0, rows: int = 3) -> int:
        return sum(primes_from(math.ceil(4 / eps), rows))

    # word-aligned composition: word i of every input arrives together
    def compose_init(self) -> list:
        return []

    def compose_step(self, acc: list, i: int, column: Sequence[int]) -> list:
        acc.append(sum(column))
        return acc

    def compose_finish(self, acc: list) -> "LinearFreqSketch":
        return type(self).from_words(self.eps, acc, len(self.moduli))


# ---------------------------------------------------------------------------
# family handle used by the simulations


@dataclass
class SketchKind:
    """Everything a simulation needs to create, ship and merge one family."""

    name: str
    cls: type
    eps: float
    total: int = 0  # number of input items, for size budgets that depend on it
    budget: int = field(init=False)

    def __post_init__(self):
        _check_eps(self.eps)
        self.budget = self.cls.budget(self.eps, self.total)

    @property
    def level(self) -> str:
        return self.cls.level

    @property
    def composable(self) -> bool:
        return hasattr(self.cls, "compose_step")

    def new(self):
        return self.cls(self.eps)

    def summarize(self, items: Iterable[int]):
        s = self.new()
        for x in items:
            s.insert(x)
        return s

    def from_words(self, words: Sequence[int]):
        return self.cls.from_words(self.eps, words)

    def require_composable(self) -> None:
        if not self.composable:
            raise NotComposable(f"{self.name} summaries cannot be merged word by word")


SKETCHES = {"gk": GKQuantileSummary, "mg": MGSummary, "linfreq": LinearFreqSketch}


def make_sketch(name: str, eps: float, total: int = 0) -> SketchKind:
    try:
        cls = SKETCHES[name]
    except KeyError:
        raise InvalidParams(f"unknown sketch {name!r}; choose from {sorted(SKETCHES)}") from None
    return SketchKind(name, cls, eps, total)
