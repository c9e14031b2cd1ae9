"""Streaming sampling primitives.

* :class:`ReservoirWOR` - Algorithm R, a uniform m-subset without replacement.
* :class:`ReservoirWR` - C independent capacity-1 reservoirs, i.e. C samples
  with replacement.
* :class:`MGTable` - per-vertex Misra-Gries table over in-neighbours.  Every
  decrement step pushes one copy of the decremented arc into an overflow sink,
  so the sink sees exactly the arcs the table drops.
* :class:`ImportantArcStore` - the multiset E1 built from the final tables.
"""

from __future__ import annotations

from bisect import bisect_left
from typing import Callable, Dict, Iterable, List, Sequence, Tuple


class ReservoirWOR:
    __slots__ = ("capacity", "held", "seen", "_rng")

    def __init__(self, capacity: int, rng):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.held: list = []
        self.seen = 0
        self._rng = rng

    def feed(self, item) -> None:
        self.seen += 1
        if len(self.held) < self.capacity:
            self.held.append(item)
            return
        j = int(self._rng.random() * self.seen)
        if j < self.capacity:
            self.held[j] = item

    def __len__(self) -> int:
        return len(self.held)


class ReservoirWR:
    """``capacity`` independent single-slot reservoirs fed the same stream."""

    __slots__ = ("capacity", "cells", "seen", "_rng")

    def __init__(self, capacity: int, rng):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.cells: list = [None] * capacity
        self.seen = 0
        self._rng = rng

    def feed(self, item) -> None:
        self.seen += 1
        k = self.seen
        cells = self.cells
        if k == 1:
            for i in range(self.capacity):
                cells[i] = item
            return
        rand = self._rng.random
        for i in range(self.capacity):
            if rand() * k < 1.0:
                cells[i] = item

    def filled(self) -> int:
        return self.capacity if self.seen else 0


class MGTable:
    """Misra-Gries table ``L_v`` with estimates ``A_v(u)`` for owner ``v``.

    ``sink(w, v)`` is called once per decrement of ``A_v(w)``.
    """

    __slots__ = ("owner", "capacity", "counts", "sink", "length")

    def __init__(self, owner: int, capacity: int, sink: Callable[[int, int], None] | None = None):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.owner = owner
        self.capacity = capacity
        self.counts: Dict[int, int] = {}
        self.sink = sink
        self.length = 0  # arcs inserted so far, i.e. d(owner)

    def insert(self, u: int) -> None:
        self.length += 1
        counts = self.counts
        if u in counts:
            counts[u] += 1
            return
        counts[u] = 1
        if len(counts) <= self.capacity:
            return
        owner, sink = self.owner, self.sink
        for w in list(counts):
            if sink is not None:
                sink(w, owner)
            c = counts[w] - 1
            if c:
                counts[w] = c
            else:
                del counts[w]

    def estimate(self, u: int) -> int:
        return self.counts.get(u, 0)

    def __len__(self) -> int:
        return len(self.counts)


class ImportantArcStore:
    """Multiset E1 of important arcs, indexed by tail for walk queries.

    Entries are kept sorted by ``(tail, head)`` so that stores built in
    memory and restored from disk answer queries identically.
    """

    def __init__(self, n: int, entries: Iterable[Tuple[int, int, int]] = ()):
        self.n = n
        merged: Dict[Tuple[int, int], int] = {}
        for u, v, a in entries:
            if a < 0:
                raise ValueError(f"negative multiplicity for arc ({u}, {v})")
            if a:
                merged[(u, v)] = merged.get((u, v), 0) + a
        self._entries: List[Tuple[int, int, int]] = sorted((u, v, a) for (u, v), a in merged.items())
        self.d1 = [0] * n
        self._heads: List[List[int]] = [[] for _ in range(n)]
        self._cum: List[List[int]] = [[] for _ in range(n)]
        for u, v, a in self._entries:
            self.d1[u] += a
            self._heads[u].append(v)
            self._cum[u].append(self.d1[u])

    @property
    def entries(self) -> Sequence[Tuple[int, int, int]]:
        return self._entries

    def multiplicity(self, u: int, v: int) -> int:
        heads = self._heads[u]
        for i, h in enumerate(heads):
            if h == v:
                prev = self._cum[u][i - 1] if i else 0
                return self._cum[u][i] - prev
        return 0

    def total_multiplicity(self) -> int:
        return sum(a for _, _, a in self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def pick(self, u: int, x: int) -> int:
        """Head of the arc owning unit ``x`` (1-based) of ``u``'s E1 mass."""
        cum = self._cum[u]
        return self._heads[u][bisect_left(cum, x)]


def mg_finalize(tables: Sequence[MGTable]) -> ImportantArcStore:
    """E1 = A_v(u) copies of arc (u, v) for every surviving table entry."""
    n = len(tables)
    entries = [(u, tbl.owner, a) for tbl in tables for u, a in tbl.counts.items()]
    return ImportantArcStore(n, entries)
