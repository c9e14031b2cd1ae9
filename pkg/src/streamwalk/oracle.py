"""Ground truth for walk simulation.

Exact walk distributions are enumerated with :class:`fractions.Fraction`, so
they sum to exactly one.  A walk that reaches a vertex of degree 0 before its
last step is counted as the ``FAIL`` outcome, matching the sketches.

Also here: generators for the lower-bound gadget graphs and random test
graphs (deterministic in their seed), empirical l1 distance with an error
bar, and a Monte-Carlo failure-rate harness that rebuilds the sketch for
every trial.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .stream import FAIL, Mode, Model, Walk, open_stream, walk_original

WalkDistribution = Dict[object, Fraction]

ENUMERATION_GUARD = 10**6


@dataclass
class DenseGraph:
    """Arc multiplicity matrix.

    ``f[u][v]`` counts arcs ``u -> v``.  Undirected graphs are symmetric and
    an undirected self-loop puts 2 on the diagonal (one per arc direction).
    """

    n: int
    f: List[List[int]]
    directed: bool

    @classmethod
    def empty(cls, n: int, directed: bool) -> "DenseGraph":
        return cls(n, [[0] * n for _ in range(n)], directed)

    @classmethod
    def from_updates(cls, n: int, updates: Iterable[Tuple[int, int, int]], directed: bool) -> "DenseGraph":
        """Net multiplicities after replaying a stream."""
        g = cls.empty(n, directed)
        for u, v, delta in updates:
            if directed:
                g.f[u][v] += delta
            elif u == v:
                g.f[u][u] += 2 * delta
            else:
                g.f[u][v] += delta
                g.f[v][u] += delta
        return g

    def degree(self, u: int) -> int:
        return sum(self.f[u])

    def loopless(self) -> "DenseGraph":
        f = [row[:] for row in self.f]
        for u in range(self.n):
            f[u][u] = 0
        return DenseGraph(self.n, f, self.directed)

    def edges(self) -> List[Tuple[int, int]]:
        """Edge list with repetitions; undirected edges listed once with u <= v."""
        out = []
        for u in range(self.n):
            for v in range(self.n):
                m = self.f[u][v]
                if self.directed:
                    out.extend([(u, v)] * m)
                elif u < v:
                    out.extend([(u, v)] * m)
                elif u == v:
                    out.extend([(u, u)] * (m // 2))
        return out

    def updates(self) -> List[Tuple[int, int, int]]:
        return [(u, v, 1) for u, v in self.edges()]

    def matrix(self) -> np.ndarray:
        return np.array(self.f, dtype=np.int64)


def exact_distribution(g: DenseGraph, v0: int, t: int, guard: int = ENUMERATION_GUARD) -> WalkDistribution:
    """Probability of every t-step walk from ``v0``, plus ``FAIL`` for dead ends."""
    n = g.n
    nbrs = [[(v, m) for v, m in enumerate(g.f[u]) if m > 0] for u in range(n)]
    deg = [sum(m for _, m in nb) for nb in nbrs]
    leaves = 0
    dist: WalkDistribution = {}

    def add(key, p):
        nonlocal leaves
        leaves += 1
        if leaves > guard:
            raise ValueError(f"more than {guard} walks; use endpoint_marginal instead")
        dist[key] = dist.get(key, Fraction(0)) + p

    stack = [((v0,), Fraction(1))]
    while stack:
        walk, p = stack.pop()
        if len(walk) == t + 1:
            add(walk, p)
            continue
        u = walk[-1]
        if deg[u] == 0:
            add(FAIL, p)
            continue
        for v, m in nbrs[u]:
            stack.append((walk + (v,), p * Fraction(m, deg[u])))
    return dist


def endpoint_marginal(g: DenseGraph, v0: int, t: int, exact: bool = True) -> list:
    """Distribution of the walk's last vertex (dead-end mass is dropped)."""
    n = g.n
    deg = [g.degree(u) for u in range(n)]
    if exact:
        p = [Fraction(0)] * n
        p[v0] = Fraction(1)
        for _ in range(t):
            nxt = [Fraction(0)] * n
            for u in range(n):
                if p[u] and deg[u]:
                    scale = p[u] / deg[u]
                    for v, m in enumerate(g.f[u]):
                        if m:
                            nxt[v] += scale * m
            p = nxt
        return p
    F = g.matrix().astype(float)
    rows = F.sum(axis=1, keepdims=True)
    T = np.divide(F, rows, out=np.zeros_like(F), where=rows > 0)
    p = np.zeros(n)
    p[v0] = 1.0
    for _ in range(t):
        p = p @ T
    return list(p)


@dataclass
class L1Estimate:
    value: float
    error_bar: float
    samples: int

    @property
    def upper(self) -> float:
        return self.value + self.error_bar


def empirical_l1(samples: Iterable[Walk] | Mapping[object, int], exact: Mapping[object, Fraction]) -> L1Estimate:
    """l1 distance between empirical outcome frequencies and ``exact``.

    ``error_bar`` is the expected distance under the null hypothesis (samples
    drawn from ``exact``), ``sum_w sqrt(2 p_w (1 - p_w) / (pi N))``, plus three
    standard deviations of the estimator, bounded by ``1/sqrt(N)`` because one
    sample moves the distance by at most ``2/N`` (McDiarmid).
    """
    counts = Counter(samples) if not isinstance(samples, Mapping) else Counter(samples)
    N = sum(counts.values())
    if N == 0:
        raise ValueError("no samples")
    keys = set(counts) | set(exact)
    value = 0.0
    for k in keys:
        value += abs(counts.get(k, 0) / N - float(exact.get(k, 0)))
    noise = sum(math.sqrt(2 * float(p) * (1 - float(p)) / (math.pi * N)) for p in exact.values())
    return L1Estimate(value, noise + 3 / math.sqrt(N), N)


# --- generators -----------------------------------------------------------


@dataclass
class UndirectedGadget:
    graph: DenseGraph
    stream: List[Tuple[int, int, int]]
    planted: List[List[List[int]]]  # planted[j-1][a][b] for group j
    side: int  # sqrt(t)
    query_block: int
    v0: int = 0

    def block(self, j: int) -> Tuple[range, range]:
        s = self.side
        start = 2 * s * j
        return range(start, start + s), range(start + s, start + 2 * s)


def gen_gadget_undirected(t: int, groups: int = 1, seed: int = 0, query_block: int = 1,
                          density: float = 0.5, planted=None) -> UndirectedGadget:
    """Layered lower-bound graph for undirected walks.

    ``V_0`` holds ``2*sqrt(t)`` vertices (ids ``0..2s-1``, start vertex 0);
    group ``j`` holds ``A_j`` then ``B_j``, ``sqrt(t)`` vertices each.  Each
    pair ``(a, b)`` in ``A_j x B_j`` is an edge with probability ``density``
    (or per the given ``planted`` bits), followed by the completion edges
    ``A_q x V_0`` for the query block ``q``.
    """
    s = math.isqrt(t)
    if s * s != t or t < 4:
        raise ValueError(f"t must be a perfect square >= 4, got {t}")
    if not (1 <= query_block <= groups):
        raise ValueError("query_block must be in [1, groups]")
    rng = random.Random(seed)
    n = 2 * s * (groups + 1)
    stream = []
    bits = []
    for j in range(1, groups + 1):
        if planted is not None:
            block_bits = [list(map(int, row)) for row in planted[j - 1]]
        else:
            block_bits = [[int(rng.random() < density) for _ in range(s)] for _ in range(s)]
        bits.append(block_bits)
        a0 = 2 * s * j
        b0 = a0 + s
        for a in range(s):
            for b in range(s):
                if block_bits[a][b]:
                    stream.append((a0 + a, b0 + b, 1))
    a0 = 2 * s * query_block
    for a in range(s):
        for v in range(2 * s):
            stream.append((a0 + a, v, 1))
    g = DenseGraph.from_updates(n, stream, directed=False)
    return UndirectedGadget(g, stream, bits, s, query_block)


@dataclass
class DirectedGadget:
    graph: DenseGraph
    stream: List[Tuple[int, int, int]]
    subsets: Dict[int, List[int]]  # encoder vertex -> its target ids
    query: int
    v0: int = 0


def gen_gadget_directed(n: int, t: int, seed: int = 0, query: int | None = None) -> DirectedGadget:
    """Layered lower-bound digraph on ``2n + 1`` vertices.

    Encoders ``n+1 .. 2n`` each point at a random t-subset of targets
    ``1 .. n``; the queried encoder then receives an arc from each of
    ``0 .. n``.  Subsets are drawn independently (no pairwise-intersection
    condition).
    """
    if not (1 <= t <= n // 2):
        raise ValueError(f"need 1 <= t <= n/2, got n={n}, t={t}")
    rng = random.Random(seed)
    stream = []
    subsets = {}
    for u in range(n + 1, 2 * n + 1):
        S = sorted(rng.sample(range(1, n + 1), t))
        subsets[u] = S
        stream.extend((u, v, 1) for v in S)
    if query is None:
        query = rng.randrange(n + 1, 2 * n + 1)
    if not (n + 1 <= query <= 2 * n):
        raise ValueError("query must be an encoder vertex")
    stream.extend((v, query, 1) for v in range(n + 1))
    g = DenseGraph.from_updates(2 * n + 1, stream, directed=True)
    return DirectedGadget(g, stream, subsets, query)


def random_graph(n: int, m: int, directed: bool, seed: int = 0, multi: bool = False,
                 loops: bool = False) -> List[Tuple[int, int, int]]:
    """``m`` uniformly random edges as an insertion stream.

    Simple graphs need ``m`` within the number of available pairs; multigraphs
    repeat edges as repeated lines.
    """
    rng = random.Random(seed)
    if directed:
        pairs = [(u, v) for u in range(n) for v in range(n) if loops or u != v]
    else:
        pairs = [(u, v) for u in range(n) for v in range(u, n) if loops or u != v]
    if multi:
        chosen = [rng.choice(pairs) for _ in range(m)]
    else:
        if m > len(pairs):
            raise ValueError(f"a simple graph on {n} vertices has at most {len(pairs)} edges")
        chosen = rng.sample(pairs, m)
    out = []
    for u, v in chosen:
        if not directed and rng.random() < 0.5:
            u, v = v, u
        out.append((u, v, 1))
    return out


def random_digraph(n: int, seed: int, max_out_degree: int = 3, multi: bool = True,
                   min_out_degree: int = 1) -> List[Tuple[int, int, int]]:
    """Digraph where every vertex draws its out-arcs independently."""
    rng = random.Random(seed)
    stream = []
    for u in range(n):
        others = [v for v in range(n) if v != u]
        k = rng.randint(min_out_degree, min(max_out_degree, len(others) if not multi else max_out_degree))
        heads = [rng.choice(others) for _ in range(k)] if multi else rng.sample(others, k)
        stream.extend((u, v, 1) for v in heads)
    rng.shuffle(stream)
    return stream


def _prefixes_ok(stream, directed: bool) -> bool:
    mult: Dict[Tuple[int, int], int] = {}
    for u, v, d in stream:
        key = (u, v) if directed else (min(u, v), max(u, v))
        mult[key] = mult.get(key, 0) + d
        if mult[key] < 0:
            return False
    return True


def with_cancellations(stream: Sequence[Tuple[int, int, int]], n: int, directed: bool, seed: int = 0,
                       noise: int = 5) -> List[Tuple[int, int, int]]:
    """Turnstile stream with the same net graph as ``stream``.

    Adds ``noise`` spurious edges that are inserted and later deleted, and
    deletes then re-inserts some real edges.  Every prefix keeps
    non-negative multiplicities.
    """
    rng = random.Random(seed)
    out = list(stream)
    for _ in range(noise):
        u = rng.randrange(n)
        v = rng.randrange(n - 1) if n > 1 else 0
        v = v + 1 if n > 1 and v >= u else v
        i = rng.randrange(len(out) + 1)
        j = rng.randrange(i, len(out) + 1)
        out.insert(i, (u, v, 1))
        out.insert(j + 1, (u, v, -1))
    for _ in range(max(1, len(stream) // 3)):
        idx = [k for k, e in enumerate(out) if e[2] == 1]
        if not idx:
            break
        k = rng.choice(idx)
        u, v, _ = out[k]
        j = rng.randrange(k + 1, len(out) + 1)
        trial = out[:j] + [(u, v, -1), (u, v, 1)] + out[j:]
        if _prefixes_ok(trial, directed):
            out = trial
    return out


# --- Monte-Carlo harness ----------------------------------------------------

Builder = Callable[..., object]


def sample_walks(build: Builder, n: int, mode: Mode | str, model: Model | str,
                 stream: Sequence[Tuple[int, int, int]], v0: int, t: int, trials: int,
                 rng: random.Random, with_loops: bool = False) -> Counter:
    """Outcome counts of ``trials`` queries, each on a freshly built sketch.

    ``build(session, rng)`` must attach a sketch to the session and return it.
    With ``with_loops`` the loopless walk is turned into a walk on the
    original graph via self-loop reinsertion.
    """
    counts: Counter = Counter()
    for _ in range(trials):
        session = open_stream(n, mode, model)
        sketch = build(session, rng)
        ingest = session.ingest_edge
        for u, v, d in stream:
            ingest(u, v, d)
        session.close()
        if with_loops:
            w = walk_original(sketch, session.degrees, v0, t, rng)
        else:
            w = sketch.walk(v0, t, rng)
        counts[w] += 1
    return counts


@dataclass
class FailureRate:
    rate: float
    error_bar: float  # three binomial standard errors
    trials: int
    failures: int


def failure_rate(build: Builder, n: int, mode: Mode | str, model: Model | str,
                 stream: Sequence[Tuple[int, int, int]], v0: int, t: int,
                 trials: int, seed: int) -> FailureRate:
    if trials < 1:
        raise ValueError("trials must be positive")
    counts = sample_walks(build, n, mode, model, stream, v0, t, trials, random.Random(seed))
    fails = counts.get(FAIL, 0)
    p = fails / trials
    return FailureRate(p, 3 * math.sqrt(p * (1 - p) / trials), trials, fails)
