from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamwalk.insertion import (
    build_directed_wor,
    build_directed_wr,
    build_undirected,
    capacity,
)
from streamwalk.oracle import DenseGraph, empirical_l1, exact_distribution, random_graph, sample_walks
from streamwalk.stream import FAIL, Mode, StreamError, open_stream


@pytest.mark.parametrize("t, eps, C", [(16, 0.5, 31), (64, 2**-8, 64), (1, 1.0, 8)])
def test_capacity_values(t, eps, C):
    cap = capacity(t, eps)
    assert cap.C == C
    assert cap.satisfied()


def test_capacity_rejects_bad_input():
    for t, eps in [(0, 0.5), (4, 0.0), (4, 1.5)]:
        with pytest.raises(ValueError):
            capacity(t, eps)


def _sketch(builder, n, mode, edges, *args):
    s = open_stream(n, mode)
    sk = builder(s, *args)
    for u, v in edges:
        s.ingest_edge(u, v)
    s.close()
    return sk, s


def test_wr_on_cycle_is_deterministic():
    sk, _ = _sketch(build_directed_wr, 3, Mode.DIRECTED, [(0, 1), (1, 2), (2, 0)], 3, random.Random(0))
    assert sk.walk(0, 3) == (0, 1, 2, 0)
    assert sk.stored_items() == 9


def test_dead_end_fails_or_stops_with_partial():
    sk, _ = _sketch(build_directed_wr, 3, Mode.DIRECTED, [(0, 1)], 2, random.Random(0))
    assert sk.walk(0, 2) is FAIL
    assert sk.walk(0, 2, partial=True) == (0, 1)


def test_wr_refuses_longer_walks():
    sk, _ = _sketch(build_directed_wr, 2, Mode.DIRECTED, [(0, 1)], 2, random.Random(0))
    with pytest.raises(ValueError):
        sk.walk(0, 3)


def test_insertion_sketch_refuses_wrong_mode():
    with pytest.raises(StreamError):
        build_undirected(open_stream(3, Mode.DIRECTED), 4, random.Random(0))


def test_triangle_is_all_important():
    sk, _ = _sketch(build_undirected, 3, Mode.UNDIRECTED, [(0, 1), (1, 2), (2, 0)], capacity(16, 0.5),
                    random.Random(0))
    assert len(sk.E1) == 6
    assert sum(s.filled() for s in sk.samplers) == 0


def test_heavy_multi_edge_stays_important():
    # f(a, b) = C + 2 copies plus C other neighbours of b; the Misra-Gries
    # estimate for a stays positive and the walk still never fails
    C = 3
    edges = [(0, 1)] * (C + 2) + [(1, v) for v in range(2, 2 + C)]
    sk, _ = _sketch(build_undirected, 2 + C, Mode.UNDIRECTED, edges, C, random.Random(2))
    assert sk.E1.multiplicity(0, 1) >= 1
    rng = random.Random(3)
    assert all(sk.walk(0, 6, rng) is not FAIL for _ in range(200))


@pytest.mark.parametrize("builder, multi", [(build_directed_wr, True), (build_directed_wor, False)])
def test_directed_walkers_are_exact(builder, multi):
    n, t = 4, 3
    edges = random_graph(n, 8, directed=True, seed=4, multi=multi)
    exact = exact_distribution(DenseGraph.from_updates(n, edges, True), 0, t)
    counts = sample_walks(lambda s, r: builder(s, t, r), n, Mode.DIRECTED, "insertion", edges, 0, t, 40000,
                          random.Random(9))
    est = empirical_l1(counts, exact)
    assert est.value <= est.error_bar


def test_wor_handles_degree_below_t():
    sk, _ = _sketch(build_directed_wor, 2, Mode.DIRECTED, [(0, 1), (1, 0)], 5, random.Random(0))
    assert sk.walk(0, 5, random.Random(1)) == (0, 1, 0, 1, 0, 1)


def test_small_capacity_errs_only_by_failing():
    # With C too small the walker fails sometimes, but a walk it does return
    # follows the true walk: every walk's frequency stays at or below its
    # exact probability, so l1 distance ~ 2 * P(fail).
    n, t, C = 10, 3, 1
    edges = random_graph(n, 30, directed=False, seed=7)
    exact = exact_distribution(DenseGraph.from_updates(n, edges, False), 0, t)
    N = 200000
    counts = sample_walks(lambda s, r: build_undirected(s, C, r), n, Mode.UNDIRECTED, "insertion", edges, 0, t,
                          N, random.Random(12))
    fail = counts[FAIL] / N
    assert fail > 0.02
    est = empirical_l1(counts, exact)
    assert abs(est.value - 2 * fail) <= est.error_bar
    excess = sum(max(0.0, c / N - float(exact.get(w, 0))) for w, c in counts.items() if w is not FAIL)
    assert excess <= est.error_bar / 2


def _undirected_build(n, edges, C, seed):
    s = open_stream(n, Mode.UNDIRECTED)
    sk = build_undirected(s, C, random.Random(seed))
    s.ingest_all(edges)
    s.close()
    return sk


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 60), st.integers(1, 4), st.integers(0, 2**32))
def test_space_budgets(n, m, C, seed):
    # multigraphs: E1 holds one (arc, count) entry per surviving table slot
    edges = random_graph(n, m, directed=False, seed=seed, multi=True)
    assert _undirected_build(n, edges, C, seed).stored_entries() <= 2 * n * C
    # simple graphs: stored arc multiplicity itself is bounded
    simple = random_graph(n, min(m, n * (n - 1) // 2), directed=False, seed=seed)
    assert _undirected_build(n, simple, C, seed).stored_multiplicity() <= 2 * n * C
    d = open_stream(n, Mode.DIRECTED)
    wr = build_directed_wr(d, C, random.Random(seed))
    d.ingest_all(edges)
    d.close()
    assert wr.stored_items() == n * C


def test_undirected_sketch_freezes():
    sk, s = _sketch(build_undirected, 3, Mode.UNDIRECTED, [(0, 1)], 2, random.Random(0))
    sk.freeze()
    with pytest.raises(StreamError):
        sk.on_arc(0, 1, 1)
