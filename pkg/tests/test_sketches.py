import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mucongest.errors import InvalidParams, NotComposable
from mucongest.sketches import (
    COMPOSABLE,
    FULLY_MERGEABLE,
    GKQuantileSummary,
    LinearFreqSketch,
    MGSummary,
    make_sketch,
    primes_from,
)

EPS = st.sampled_from([0.05, 0.1, 0.2, 0.25, 0.5])
ITEMS = st.lists(st.integers(0, 40), max_size=300)


def rank_ok(summary, items):
    """Every rank query answered within eps*m, checked against the sorted data."""
    data = sorted(items)
    m = len(data)
    for r in range(1, m + 1):
        v = summary.query(r)
        lo = sum(1 for x in data if x < v) + 1
        hi = sum(1 for x in data if x <= v)
        if not (lo - summary.eps * m <= r <= hi + summary.eps * m):
            return False
    return True


def random_merge_tree(kind, items, parts, rng):
    chunks = [[] for _ in range(parts)]
    for x in items:
        chunks[rng.randrange(parts)].append(x)
    pool = [kind.summarize(c) for c in chunks]
    while len(pool) > 1:
        a = pool.pop(rng.randrange(len(pool)))
        b = pool.pop(rng.randrange(len(pool)))
        pool.append(a.merged(b))
    return pool[0]


# -- GK ------------------------------------------------------------------------


def test_gk_path_of_eight():
    s = make_sketch("gk", 0.5).summarize(range(1, 9))
    for r in range(1, 9):
        assert abs(s.query(r) - r) <= 4


def test_gk_keeps_extremes():
    s = make_sketch("gk", 0.2).summarize([5, 3, 9, 1, 7] * 20)
    assert s.tuples[0][0] == 1 and s.tuples[-1][0] == 9
    assert s.query(1) == 1 and s.query(s.m) == 9


@settings(max_examples=60, deadline=None)
@given(eps=EPS, items=ITEMS)
def test_gk_stream_rank_error(eps, items):
    s = make_sketch("gk", eps).summarize(items)
    assert s.m == len(items)
    assert rank_ok(s, items)
    if items:
        assert s.word_count() <= GKQuantileSummary.budget(eps, len(items))


@settings(max_examples=60, deadline=None)
@given(eps=EPS, items=ITEMS, parts=st.integers(1, 12), seed=st.integers(0, 10**6))
def test_gk_merge_tree_rank_error(eps, items, parts, seed):
    kind = make_sketch("gk", eps, len(items))
    s = random_merge_tree(kind, items, parts, random.Random(seed))
    assert s.m == len(items)
    assert rank_ok(s, items)
    assert s.word_count() <= kind.budget


@settings(max_examples=30, deadline=None)
@given(eps=EPS, items=ITEMS)
def test_gk_words_round_trip(eps, items):
    s = make_sketch("gk", eps).summarize(items)
    assert GKQuantileSummary.from_words(eps, s.to_words()) == s
    assert len(s.to_words()) == s.word_count()


def test_gk_empty_query_rejected():
    with pytest.raises(InvalidParams):
        GKQuantileSummary(0.1).query(1)


# -- MG ------------------------------------------------------------------------


def mg_ok(s, items):
    f = Counter(items)
    m = len(items)
    return all(0 <= f[x] - s.estimate(x) <= s.eps * m for x in set(f) | set(s.counters))


@settings(max_examples=60, deadline=None)
@given(eps=EPS, items=ITEMS, parts=st.integers(1, 12), seed=st.integers(0, 10**6))
def test_mg_error_is_one_sided_and_bounded(eps, items, parts, seed):
    kind = make_sketch("mg", eps, len(items))
    stream = kind.summarize(items)
    merged = random_merge_tree(kind, items, parts, random.Random(seed))
    for s in (stream, merged):
        assert s.m == len(items)
        assert mg_ok(s, items)
        assert len(s.counters) <= s.capacity
        assert s.word_count() <= kind.budget


def test_mg_single_heavy_label():
    s = make_sketch("mg", 0.5).summarize([7] * 20)
    assert s.estimate(7) == 20


def test_mg_words_round_trip():
    s = make_sketch("mg", 0.1).summarize([1, 2, 2, 3, 3, 3, 9])
    assert MGSummary.from_words(0.1, s.to_words()) == s


# -- linear sketch -------------------------------------------------------------


def test_primes_from():
    assert primes_from(8, 3) == [11, 13, 17]
    assert primes_from(2, 2) == [2, 3]


@settings(max_examples=40, deadline=None)
@given(eps=EPS, items=ITEMS, parts=st.integers(1, 8), seed=st.integers(0, 10**6))
def test_linear_merge_is_the_entrywise_sum(eps, items, parts, seed):
    kind = make_sketch("linfreq", eps)
    whole = kind.summarize(items)
    merged = random_merge_tree(kind, items, parts, random.Random(seed))
    assert merged == whole
    f = Counter(items)
    assert all(whole.estimate(x) >= f[x] for x in f)
    assert whole.m == len(items)


def test_linear_composition_matches_merging():
    kind = make_sketch("linfreq", 0.25)
    a, b = kind.summarize([1, 2, 3]), kind.summarize([3, 4, 40])
    acc = a.compose_init()
    for i, column in enumerate(zip(a.to_words(), b.to_words())):
        acc = a.compose_step(acc, i, column)
    assert a.compose_finish(acc) == a.merged(b)
    assert LinearFreqSketch.from_words(0.25, a.to_words()) == a


def test_linear_moduli_mismatch():
    with pytest.raises(InvalidParams):
        LinearFreqSketch(0.25).merged(LinearFreqSketch(0.1))


# -- family handles --------------------------------------------------------------


def test_levels_and_composability():
    assert make_sketch("gk", 0.1).level == FULLY_MERGEABLE
    assert make_sketch("mg", 0.1).level == FULLY_MERGEABLE
    assert make_sketch("linfreq", 0.1).level == COMPOSABLE
    make_sketch("linfreq", 0.1).require_composable()
    with pytest.raises(NotComposable):
        make_sketch("mg", 0.1).require_composable()


@pytest.mark.parametrize("eps", [0, 1, -0.5, 2])
def test_bad_epsilon(eps):
    with pytest.raises(InvalidParams):
        make_sketch("mg", eps)


def test_unknown_sketch():
    with pytest.raises(InvalidParams):
        make_sketch("bloom", 0.1)


def test_budgets():
    assert MGSummary.budget(0.25) == 1 + 2 * 4
    assert LinearFreqSketch.budget(0.5) == sum(primes_from(8, 3))
