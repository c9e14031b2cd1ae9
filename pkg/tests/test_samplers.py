from __future__ import annotations

import itertools
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamwalk.samplers import ImportantArcStore, MGTable, ReservoirWOR, ReservoirWR, mg_finalize


def test_wor_holds_everything_until_full():
    r = ReservoirWOR(3, random.Random(0))
    for x in "ab":
        r.feed(x)
    assert r.held == ["a", "b"] and r.seen == 2


def test_wor_subsets_are_uniform():
    # all C(5, 2) = 10 subsets equally likely
    rng = random.Random(11)
    trials = 30000
    counts = Counter()
    for _ in range(trials):
        r = ReservoirWOR(2, rng)
        for x in range(5):
            r.feed(x)
        counts[frozenset(r.held)] += 1
    assert len(counts) == 10
    expected = trials / 10
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert chi2 < 27.9  # 9 dof, p = 0.001


def test_wr_cells_are_independent_uniform():
    rng = random.Random(5)
    trials = 20000
    pairs = Counter()
    for _ in range(trials):
        r = ReservoirWR(2, rng)
        for x in range(3):
            r.feed(x)
        pairs[tuple(r.cells)] += 1
    assert len(pairs) == 9
    for c in pairs.values():
        assert abs(c / trials - 1 / 9) < 0.012


def test_wr_first_item_fills_every_cell():
    r = ReservoirWR(4, random.Random(0))
    assert r.filled() == 0
    r.feed("x")
    assert r.cells == ["x"] * 4 and r.filled() == 4


def test_mg_hand_trace():
    sunk = []
    tbl = MGTable(owner=9, capacity=2, sink=lambda w, v: sunk.append((w, v)))
    for u in ["a", "a", "a", "b", "c"]:
        tbl.insert(u)
    assert tbl.counts == {"a": 2}
    assert sorted(sunk) == [("a", 9), ("b", 9), ("c", 9)]
    assert tbl.length == 5


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 12), max_size=80), st.integers(1, 6))
def test_mg_bounds(stream, C):
    sunk = Counter()
    tbl = MGTable(0, C, lambda w, v: sunk.__setitem__(w, sunk[w] + 1))
    for u in stream:
        tbl.insert(u)
        assert len(tbl) <= C
    d = len(stream)
    f = Counter(stream)
    for u, fu in f.items():
        a = tbl.estimate(u)
        assert 0 <= fu - a
        assert (fu - a) * (C + 1) <= d
        # unimportant share of every in-neighbour is below 1/C
        assert (fu - a) * C < d
        # the sink sees exactly the dropped copies
        assert sunk[u] == fu - a


def test_important_store_pick_is_multiplicity_weighted():
    store = ImportantArcStore(3, [(0, 2, 1), (0, 1, 2), (1, 0, 1)])
    assert store.d1 == [3, 1, 0]
    assert [store.pick(0, x) for x in (1, 2, 3)] == [1, 1, 2]
    assert store.multiplicity(0, 1) == 2 and store.multiplicity(2, 0) == 0
    assert len(store) == 3 and store.total_multiplicity() == 4


def test_important_store_is_order_independent():
    entries = [(0, 2, 1), (0, 1, 2), (1, 0, 1)]
    for perm in itertools.permutations(entries):
        assert ImportantArcStore(3, perm).entries == ImportantArcStore(3, entries).entries


def test_mg_finalize_collects_surviving_entries():
    tables = [MGTable(v, 2) for v in range(3)]
    for u in [1, 1, 2]:
        tables[0].insert(u)
    store = mg_finalize(tables)
    assert store.entries == [(1, 0, 2), (2, 0, 1)]


def test_bad_capacities_rejected():
    with pytest.raises(ValueError):
        ReservoirWOR(0, random.Random())
    with pytest.raises(ValueError):
        MGTable(0, 0)
