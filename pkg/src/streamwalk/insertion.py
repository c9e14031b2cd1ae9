"""Insertion-only random-walk sketches.

Three walkers share one query shape, ``sketch.walk(v0, t, rng, partial=False)``:

* :class:`DirectedSketchWR` keeps t with-replacement samples of every
  vertex's out-arcs; the i-th visit to ``u`` follows sample i.  Perfect.
* :class:`DirectedSketchWOR` keeps a without-replacement reservoir of t
  out-neighbours for simple digraphs and re-walks used arcs with probability
  ``d_used / d``.  Perfect.
* :class:`UndirectedSketch` splits arcs into an important multiset E1 (via
  per-vertex Misra-Gries tables) and C sampled unimportant arcs per vertex,
  and fails when a vertex needs a (C+1)-st unimportant departure.

All per-query state (visit counters, used flags) lives in the query, so one
frozen sketch can answer many queries.  Queries reuse the same sampled arcs
and are therefore correlated with each other; each one individually has the
stated guarantee.

With ``partial=True`` a walk that reaches a vertex of out-degree 0 returns
the prefix ending there instead of ``FAIL``; self-loop reinsertion needs it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

from .samplers import ImportantArcStore, MGTable, ReservoirWOR, ReservoirWR, mg_finalize
from .stream import FAIL, Mode, Model, StreamError, StreamSession, Walk


@dataclass(frozen=True)
class Capacity:
    t: int
    epsilon: float
    delta: float
    q: float
    C: int

    def bound_log2(self) -> float:
        """log2 of ``(e*t/C**2)**C``, the per-vertex failure bound."""
        return self.C * math.log2(math.e * self.t / self.C**2)

    def satisfied(self) -> bool:
        return self.bound_log2() < math.log2(self.delta)


def capacity(t: int, epsilon: float) -> Capacity:
    """Per-vertex sample capacity for an undirected walk of ``t`` steps.

    delta = epsilon / (2t), q = 2 + log2(1/delta) / sqrt(t) and
    C = ceil(4 sqrt(t) q / log2 q).  Computed in double precision; the
    failure bound ``(e t / C^2)^C < delta`` is re-checked before returning.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if not (0 < epsilon <= 1):
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    delta = epsilon / (2 * t)
    root = math.sqrt(t)
    q = 2 + math.log2(1 / delta) / root
    C = math.ceil(4 * root * q / math.log2(q))
    cap = Capacity(t=t, epsilon=epsilon, delta=delta, q=q, C=C)
    if not cap.satisfied():
        raise ArithmeticError(f"capacity {C} violates the failure bound for t={t}, epsilon={epsilon}")
    return cap


def _require(session: StreamSession, mode: Mode, model: Model | None = Model.INSERTION) -> None:
    if session.mode is not mode:
        raise StreamError(f"sketch needs a {mode.value} session, got {session.mode.value}")
    if model is not None and session.model is not model:
        raise StreamError(f"sketch needs a {model.value} session, got {session.model.value}")


class DirectedSketchWR:
    kind = "wr"

    def __init__(self, n: int, t: int, rng):
        if t < 1:
            raise ValueError("t must be >= 1")
        self.n = n
        self.t = t
        self.samplers = [ReservoirWR(t, rng) for _ in range(n)]
        self.out_degree = [0] * n

    def on_arc(self, tail: int, head: int, delta: int) -> None:
        if delta != 1:
            raise StreamError("with-replacement sketch is insertion-only")
        self.out_degree[tail] += 1
        self.samplers[tail].feed(head)

    def finalize(self) -> None:
        pass

    def stored_items(self) -> int:
        return self.n * self.t

    def walk(self, v0: int, t: int | None = None, rng=None, partial: bool = False) -> Walk:
        t = self.t if t is None else t
        if t > self.t:
            raise ValueError(f"sketch holds {self.t} samples per vertex, asked for {t} steps")
        deg = self.out_degree
        samplers = self.samplers
        visits = {}
        u = v0
        out = [u]
        for _ in range(t):
            if deg[u] == 0:
                return tuple(out) if partial else FAIL
            i = visits.get(u, 0)
            visits[u] = i + 1
            u = samplers[u].cells[i]
            out.append(u)
        return tuple(out)


class DirectedSketchWOR:
    """Simple digraphs only: repeated arcs silently skew the walk."""

    kind = "wor"

    def __init__(self, n: int, t: int, rng):
        if t < 1:
            raise ValueError("t must be >= 1")
        self.n = n
        self.t = t
        self.reservoirs = [ReservoirWOR(t, rng) for _ in range(n)]
        self.out_degree = [0] * n

    def on_arc(self, tail: int, head: int, delta: int) -> None:
        if delta != 1:
            raise StreamError("without-replacement sketch is insertion-only")
        self.out_degree[tail] += 1
        self.reservoirs[tail].feed(head)

    def finalize(self) -> None:
        pass

    def stored_items(self) -> int:
        return sum(len(r) for r in self.reservoirs)

    def walk(self, v0: int, t: int | None, rng, partial: bool = False) -> Walk:
        t = self.t if t is None else t
        if t > self.t:
            raise ValueError(f"sketch holds {self.t} samples per vertex, asked for {t} steps")
        deg = self.out_degree
        reservoirs = self.reservoirs
        rand = rng.random
        used: dict = {}
        unused: dict = {}
        u = v0
        out = [u]
        for _ in range(t):
            d = deg[u]
            if d == 0:
                return tuple(out) if partial else FAIL
            us = used.get(u)
            if us is None:
                us = used[u] = []
                un = unused[u] = list(reservoirs[u].held)
            else:
                un = unused[u]
            k = len(us)
            if k and rand() * d < k:
                nxt = us[int(rand() * k)]
            else:
                # a uniform pick among unused reservoir slots is a uniform
                # pick among all not-yet-used out-neighbours
                j = int(rand() * len(un))
                nxt = un[j]
                un[j] = un[-1]
                un.pop()
                us.append(nxt)
            u = nxt
            out.append(u)
        return tuple(out)


class UndirectedSketch:
    """Misra-Gries based undirected walker (multigraphs allowed)."""

    kind = "undirected-sketch"

    def __init__(self, n: int, C: int, rng):
        if C < 1:
            raise ValueError("C must be >= 1")
        self.n = n
        self.C = C
        self.degree = [0] * n
        self.samplers = [ReservoirWR(C, rng) for _ in range(n)]
        self.fed = [0] * n
        self.tables: List[MGTable] | None = [MGTable(v, C, self._discard) for v in range(n)]
        self.E1: ImportantArcStore | None = None

    def _discard(self, w: int, v: int) -> None:
        self.fed[w] += 1
        self.samplers[w].feed(v)

    def on_arc(self, tail: int, head: int, delta: int) -> None:
        if delta != 1:
            raise StreamError("undirected sketch is insertion-only")
        if self.tables is None:
            raise StreamError("sketch is frozen")
        self.degree[head] += 1
        self.tables[head].insert(tail)

    def finalize(self) -> None:
        if self.E1 is None:
            self.E1 = mg_finalize(self.tables)

    def freeze(self) -> None:
        """Finalize and drop the Misra-Gries tables."""
        self.finalize()
        self.tables = None

    def stored_entries(self) -> int:
        """Stored words: distinct E1 arcs (each with a count) plus filled sampler cells."""
        self.finalize()
        return len(self.E1) + sum(s.filled() for s in self.samplers)

    def stored_multiplicity(self) -> int:
        self.finalize()
        return self.E1.total_multiplicity() + sum(s.filled() for s in self.samplers)

    def walk(self, v0: int, t: int, rng, partial: bool = False) -> Walk:
        self.finalize()
        deg = self.degree
        E1 = self.E1
        d1 = E1.d1
        samplers = self.samplers
        C = self.C
        rand = rng.random
        used: dict = {}
        u = v0
        out = [u]
        for _ in range(t):
            d = deg[u]
            if d == 0:
                return tuple(out) if partial else FAIL
            x = int(rand() * d) + 1
            if x <= d1[u]:
                u = E1.pick(u, x)
            else:
                j = used.get(u, 0) + 1
                if j > C:
                    return FAIL
                used[u] = j
                u = samplers[u].cells[j - 1]
            out.append(u)
        return tuple(out)


def build_directed_wr(session: StreamSession, t: int, rng) -> DirectedSketchWR:
    _require(session, Mode.DIRECTED)
    return session.attach(DirectedSketchWR(session.n, t, rng))


def build_directed_wor(session: StreamSession, t: int, rng) -> DirectedSketchWOR:
    _require(session, Mode.DIRECTED)
    return session.attach(DirectedSketchWOR(session.n, t, rng))


def build_undirected(session: StreamSession, C: Capacity | int, rng) -> UndirectedSketch:
    _require(session, Mode.UNDIRECTED)
    c = C.C if isinstance(C, Capacity) else int(C)
    return session.attach(UndirectedSketch(session.n, c, rng))


def walk_directed_wr(sk: DirectedSketchWR, v0: int, t: int, rng=None) -> Walk:
    return sk.walk(v0, t, rng)


def walk_directed_wor(sk: DirectedSketchWOR, v0: int, t: int, rng) -> Walk:
    return sk.walk(v0, t, rng)


def simulate_random_walk(sk: UndirectedSketch, v0: int, t: int, rng) -> Walk:
    return sk.walk(v0, t, rng)
