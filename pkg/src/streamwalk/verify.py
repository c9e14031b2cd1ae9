"""Verification suites: Monte-Carlo runs checked against the exact oracle.

Every suite returns a list of :class:`Check` records.  The CLI prints them as
JSON lines; the acceptance tests run the same suites at full size.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List

import numpy as np

from .oracle import (
    DenseGraph,
    L1Estimate,
    empirical_l1,
    endpoint_marginal,
    exact_distribution,
    failure_rate,
    gen_gadget_undirected,
    random_digraph,
    random_graph,
    sample_walks,
    with_cancellations,
)
from .registry import ALGORITHMS, sketch_arrays
from .seeding import derive_seed
from .stream import FAIL, Mode, Model, open_stream
from .turnstile import L1Sampler


@dataclass
class Check:
    name: str
    value: float
    bound: float
    passed: bool

    def record(self) -> dict:
        return asdict(self)


def _le(name: str, value: float, bound: float) -> Check:
    return Check(name, float(value), float(bound), bool(value <= bound))


def _builder(algo: str, t: int, epsilon: float):
    build = ALGORITHMS[algo].build
    return lambda session, rng: build(session, t, epsilon, rng)


def _walk_l1(algo, n, stream, v0, t, epsilon, trials, rng, with_loops=False) -> L1Estimate:
    a = ALGORITHMS[algo]
    directed = a.mode is Mode.DIRECTED
    g = DenseGraph.from_updates(n, stream, directed)
    exact = exact_distribution(g, v0, t)
    counts = sample_walks(_builder(algo, t, epsilon), n, a.mode, a.model, stream, v0, t, trials, rng, with_loops)
    return empirical_l1(counts, exact)


def _endpoint_l1(counts: Counter, g: DenseGraph, v0: int, t: int) -> L1Estimate:
    """l1 between endpoint frequencies (Fail as its own outcome) and the exact marginal."""
    marginal = endpoint_marginal(g, v0, t)
    exact = {v: p for v, p in enumerate(marginal) if p}
    lost = 1 - sum(exact.values())
    if lost:
        exact[FAIL] = lost
    ends = Counter()
    for w, c in counts.items():
        ends[FAIL if w is FAIL else w[-1]] += c
    return empirical_l1(ends, exact)


def suite_perfect(trials: int = 20000, seed: int = 0, graphs: int = 20, n: int = 6, t: int = 4,
                  algos=("wr", "wor"), tolerance: float = 0.05) -> List[Check]:
    """Perfect directed walkers on random digraphs: l1 <= tolerance."""
    checks = []
    for algo in algos:
        multi = algo == "wr"
        for i in range(graphs):
            size = 3 + i % (n - 2)  # sizes cycle through 3..n
            stream = random_digraph(size, derive_seed(seed, 1, i), max_out_degree=3, multi=multi)
            est = _walk_l1(algo, size, stream, 0, t, 1.0, trials, random.Random(derive_seed(seed, 2, i)))
            checks.append(_le(f"perfect/{algo}/graph{i}", est.value, tolerance))
    return checks


def suite_epsilon(trials: int = 20000, seed: int = 0, epsilon: float = 0.25, t: int = 4,
                  graphs: int = 10, n: int = 6, m: int = 14, gadget_t: int = 16,
                  gadget_trials: int | None = None) -> List[Check]:
    """Undirected walker within epsilon (plus error bar) of the exact walk.

    Random multigraphs are compared walk-for-walk.  The gadget's walks are
    too many to enumerate, so it is compared on endpoint marginals, which can
    only understate the walk distance.
    """
    checks = []
    algo = "undirected-sketch"
    tri = [(0, 1, 1), (1, 2, 1), (2, 0, 1)]
    est = _walk_l1(algo, 3, tri, 0, t, epsilon, trials, random.Random(derive_seed(seed, 3)))
    checks.append(_le("epsilon/triangle", est.value, est.error_bar))
    for i in range(graphs):
        stream = random_graph(n, m, directed=False, seed=derive_seed(seed, 4, i), multi=True)
        stream.append((0, 1 + i % (n - 1), 1))  # keep the start vertex connected
        est = _walk_l1(algo, n, stream, 0, t, epsilon, trials, random.Random(derive_seed(seed, 5, i)))
        checks.append(_le(f"epsilon/multigraph{i}", est.value, epsilon + est.error_bar))
    gadget = gen_gadget_undirected(gadget_t, groups=1, seed=derive_seed(seed, 6))
    gn = gadget.graph.n
    counts = sample_walks(_builder(algo, gadget_t, epsilon), gn, Mode.UNDIRECTED, Model.INSERTION,
                          gadget.stream, gadget.v0, gadget_t, gadget_trials or trials,
                          random.Random(derive_seed(seed, 7)))
    est = _endpoint_l1(counts, gadget.graph, gadget.v0, gadget_t)
    checks.append(_le("epsilon/gadget-endpoint", est.value, epsilon + est.error_bar))
    return checks


def suite_failure(trials: int = 20000, seed: int = 0, epsilon: float = 0.25, t: int = 16,
                  groups: int = 1) -> List[Check]:
    """Fail rate of the undirected walker on the gadget: <= epsilon/2 + 3 sigma."""
    gadget = gen_gadget_undirected(t, groups=groups, seed=derive_seed(seed, 8))
    fr = failure_rate(_builder("undirected-sketch", t, epsilon), gadget.graph.n, Mode.UNDIRECTED,
                      Model.INSERTION, gadget.stream, gadget.v0, t, trials, derive_seed(seed, 9))
    return [_le(f"failure/gadget-t{t}", fr.rate, epsilon / 2 + fr.error_bar)]


def _states_equal(a, b) -> bool:
    ma, xa = sketch_arrays(a)
    mb, xb = sketch_arrays(b)
    if set(xa) != set(xb):
        return False
    return all(np.array_equal(xa[k], xb[k]) for k in xa)


def _turnstile_state(algo, n, stream, t, epsilon, sketch_seed):
    a = ALGORITHMS[algo]
    session = open_stream(n, a.mode, a.model)
    sk = a.build(session, t, epsilon, random.Random(sketch_seed))
    session.ingest_all(stream)
    session.close()
    return sk


def suite_turnstile(trials: int = 2000, seed: int = 0, epsilon: float = 0.25, t: int = 4,
                    graphs: int = 3, n: int = 6, m: int = 9) -> List[Check]:
    """Turnstile walkers on streams with deletions, against the net graph."""
    checks = []
    for algo, directed in (("turnstile-directed", True), ("turnstile-undirected", False)):
        for i in range(graphs):
            gseed = derive_seed(seed, 10, i)
            if directed:
                base = random_digraph(n, gseed, max_out_degree=3, multi=True)
            else:
                base = random_graph(n, m, directed=False, seed=gseed, multi=True) + [(0, 1 + i % (n - 1), 1)]
            stream = with_cancellations(base, n, directed, seed=derive_seed(seed, 11, i))
            est = _walk_l1(algo, n, stream, 0, t, epsilon, trials, random.Random(derive_seed(seed, 12, i)))
            checks.append(_le(f"turnstile/{algo}/graph{i}", est.value, epsilon + est.error_bar))
            # linearity: same seed, permuted / cancelled stream, same net vector
            sk_seed = derive_seed(seed, 13, i)
            shuffled = list(base)
            random.Random(sk_seed).shuffle(shuffled)
            ref = _turnstile_state(algo, n, base, t, epsilon, sk_seed)
            mismatches = sum(
                not _states_equal(ref, _turnstile_state(algo, n, s, t, epsilon, sk_seed))
                for s in (stream, shuffled)
            )
            checks.append(_le(f"turnstile/{algo}/linearity{i}", mismatches, 0))
    return checks


def suite_sampler(trials: int = 10000, seed: int = 0, delta_s: float = 0.05, tolerance: float = 0.02,
                  vectors=None, universe: int = 16) -> List[Check]:
    """l1 sampler: conditional output distribution and failure rate."""
    if vectors is None:
        vectors = [
            {0: 8, 1: 1, 2: 1},
            {1: 1, 2: 1},
            {i: 1 for i in range(8)},
            {3: 5, 7: 2, 9: 1, 11: 4, 15: 3},
            {i: i + 1 for i in range(8)},
        ]
    checks = []
    for vi, vec in enumerate(vectors):
        total = sum(vec.values())
        counts: Counter = Counter()
        fails = 0
        for k in range(trials):
            s = L1Sampler(universe, delta_s, derive_seed(seed, 14, vi, k))
            for j, f in vec.items():
                s.update(j, f)
            out = s.query()
            if out is None:
                fails += 1
            else:
                counts[out] += 1
        ok = trials - fails
        tv = 0.5 * sum(abs(counts.get(j, 0) / max(ok, 1) - vec.get(j, 0) / total)
                       for j in set(vec) | set(counts))
        checks.append(_le(f"sampler/vector{vi}/tv", tv, tolerance))
        rate = fails / trials
        sigma = math.sqrt(delta_s * (1 - delta_s) / trials)
        checks.append(_le(f"sampler/vector{vi}/fail", rate, delta_s + 3 * sigma))
    return checks


def loopy_graphs(seed: int) -> list:
    """Small graphs with self-loops: (name, algo, n, stream)."""
    rng = random.Random(seed)
    out = []
    for i in range(2):
        n = 5 - i
        stream = random_digraph(n, rng.getrandbits(32), max_out_degree=3, multi=True, min_out_degree=0)
        stream += [(v, v, 1) for v in range(n) if rng.random() < 0.6]
        stream += [(0, 0, 1)]
        out.append((f"directed{i}", "wr", n, stream))
    for i in range(2):
        n = 5 - i
        stream = random_graph(n, 6, directed=False, seed=rng.getrandbits(32), multi=True, loops=True)
        stream += [(0, 0, 1), (1, 1, 1)]
        out.append((f"undirected{i}", "undirected-sketch", n, stream))
    return out


def suite_loops(trials: int = 20000, seed: int = 0, t: int = 4, epsilon: float = 0.25,
                tolerance: float = 0.05) -> List[Check]:
    """Loopless sketch plus self-loop reinsertion against the loopy-walk oracle."""
    checks = []
    for i, (name, algo, n, stream) in enumerate(loopy_graphs(derive_seed(seed, 15))):
        est = _walk_l1(algo, n, stream, 0, t, epsilon, trials,
                       random.Random(derive_seed(seed, 16, i)), with_loops=True)
        checks.append(_le(f"loops/{name}", est.value, tolerance))
    return checks


SUITES: Dict[str, Callable[..., List[Check]]] = {
    "perfect": suite_perfect,
    "epsilon": suite_epsilon,
    "failure": suite_failure,
    "turnstile-equiv": suite_turnstile,
    "sampler": suite_sampler,
    "self-loops": suite_loops,
}
