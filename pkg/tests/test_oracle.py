from __future__ import annotations

import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamwalk.oracle import (
    DenseGraph,
    empirical_l1,
    endpoint_marginal,
    exact_distribution,
    gen_gadget_directed,
    gen_gadget_undirected,
    random_digraph,
    random_graph,
    with_cancellations,
)
from streamwalk.stream import FAIL


def _g(n, edges, directed=False):
    return DenseGraph.from_updates(n, [(u, v, 1) for u, v in edges], directed)


def test_path_is_forced():
    assert exact_distribution(_g(2, [(0, 1)]), 0, 2) == {(0, 1, 0): 1}


def test_triangle_walks_are_uniform():
    dist = exact_distribution(_g(3, [(0, 1), (1, 2), (2, 0)]), 0, 2)
    assert len(dist) == 4 and set(dist.values()) == {Fraction(1, 4)}


def test_multigraph_weights():
    g = _g(3, [(0, 1), (0, 1), (0, 2)], directed=True)
    assert exact_distribution(g, 0, 1) == {(0, 1): Fraction(2, 3), (0, 2): Fraction(1, 3)}


def test_dead_ends_become_fail():
    dist = exact_distribution(_g(3, [(0, 1), (0, 2), (1, 0)], directed=True), 0, 2)
    assert dist[FAIL] == Fraction(1, 2)


def test_guard_rejects_huge_instances():
    g = _g(6, [(u, v) for u in range(6) for v in range(u + 1, 6)])
    with pytest.raises(ValueError):
        exact_distribution(g, 0, 12, guard=1000)


def test_undirected_loop_counts_twice():
    g = _g(2, [(0, 0), (0, 1)])
    assert g.degree(0) == 3
    assert exact_distribution(g, 0, 1) == {(0, 0): Fraction(2, 3), (0, 1): Fraction(1, 3)}
    assert g.loopless().f[0][0] == 0


def test_endpoint_marginal_basics():
    g = _g(4, [(0, 2), (0, 3), (1, 2), (1, 3)])
    assert endpoint_marginal(g, 0, 0) == [1, 0, 0, 0]
    odd = endpoint_marginal(g, 0, 3)
    assert odd[0] == odd[1] == 0 and sum(odd) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(1, 10), st.integers(0, 4), st.booleans(), st.integers(0, 10**6))
def test_enumeration_is_consistent(n, m, t, directed, seed):
    g = DenseGraph.from_updates(n, random_graph(n, m, directed, seed=seed, multi=True, loops=True), directed)
    dist = exact_distribution(g, 0, t)
    assert sum(dist.values()) == 1
    ends = [Fraction(0)] * n
    for w, p in dist.items():
        if w is not FAIL:
            ends[w[-1]] += p
    assert ends == endpoint_marginal(g, 0, t)
    floats = endpoint_marginal(g, 0, t, exact=False)
    assert max(abs(a - float(b)) for a, b in zip(floats, ends)) < 1e-12


def test_empirical_l1_extremes():
    exact = {(0, 1): Fraction(1, 2), (0, 2): Fraction(1, 2)}
    assert empirical_l1([FAIL] * 10, exact).value == 2
    rng = random.Random(0)
    samples = [rng.choice([(0, 1), (0, 2)]) for _ in range(20000)]
    est = empirical_l1(samples, exact)
    assert est.value <= est.error_bar


def test_undirected_gadget_layout():
    gad = gen_gadget_undirected(16, groups=1, seed=3)
    assert gad.graph.n == 16
    assert len(gad.planted) == 1 and len(gad.planted[0]) == 4 and len(gad.planted[0][0]) == 4
    A, B = gad.block(1)
    for a in A:
        for b in B:
            assert gad.graph.f[a][b] == gad.planted[0][a - A.start][b - B.start]
        # completion edges to every V_0 vertex
        assert all(gad.graph.f[a][v] == 1 for v in range(8))


def test_gadget_all_zeros_has_no_block_edges():
    gad = gen_gadget_undirected(4, planted=[[[0, 0], [0, 0]]])
    A, B = gad.block(1)
    assert all(gad.graph.f[a][b] == 0 for a in A for b in B)


def test_directed_gadget_layout():
    gad = gen_gadget_directed(8, 2, seed=1)
    g = gad.graph
    assert g.n == 17
    for u in range(9, 17):
        targets = sum(g.f[u][v] for v in range(1, 9))
        assert targets == 2
    assert all(g.f[v][gad.query] == 1 for v in range(9))


def test_generators_are_deterministic():
    assert random_graph(5, 8, False, seed=1) == random_graph(5, 8, False, seed=1)
    assert random_digraph(6, 4) == random_digraph(6, 4)
    a = gen_gadget_undirected(16, groups=2, seed=9)
    b = gen_gadget_undirected(16, groups=2, seed=9)
    assert a.stream == b.stream


def test_simple_graph_has_no_repeats():
    edges = random_graph(5, 10, directed=False, seed=2)
    keys = Counter(frozenset((u, v)) for u, v, _ in edges)
    assert max(keys.values()) == 1
    with pytest.raises(ValueError):
        random_graph(3, 4, directed=False)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(1, 12), st.booleans(), st.integers(0, 10**6))
def test_cancellations_keep_net_graph(n, m, directed, seed):
    base = random_graph(n, m, directed, seed=seed, multi=True)
    noisy = with_cancellations(base, n, directed, seed=seed)
    assert any(d < 0 for _, _, d in noisy)
    assert DenseGraph.from_updates(n, noisy, directed) == DenseGraph.from_updates(n, base, directed)
