"""Stream model: updates, exact degree tracking and self-loop handling.

A :class:`StreamSession` owns the degree table for one pass over an edge
stream.  Sketches attach to the session before ingestion starts and receive
every non-loop update as arc events ``on_arc(tail, head, delta)``; an
undirected edge is delivered as the two arcs ``u->v`` then ``v->u``.
Self-loops never reach the sketches, they only advance ``d_self``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Protocol, Sequence, TextIO, Tuple, Union

import numpy as np


class _Fail:
    """Marker returned instead of a walk when simulation fails."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "FAIL"

    def __reduce__(self):
        return (_Fail, ())


FAIL = _Fail()

Walk = Union[Tuple[int, ...], _Fail]


class Mode(str, enum.Enum):
    DIRECTED = "directed"
    UNDIRECTED = "undirected"


class Model(str, enum.Enum):
    INSERTION = "insertion"
    TURNSTILE = "turnstile"


class StreamError(ValueError):
    pass


class StreamFormatError(StreamError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Update:
    tail: int
    head: int
    delta: int = 1
    orientation: Mode = Mode.DIRECTED


class ArcConsumer(Protocol):
    def on_arc(self, tail: int, head: int, delta: int) -> None: ...

    def finalize(self) -> None: ...


class DegreeTable:
    """Exact loopless degrees ``d`` and removed self-loop mass ``d_self``.

    For directed graphs ``d`` is the out-degree.  A directed self-loop adds 1
    to ``d_self``, an undirected one adds 2 (both arc directions).
    """

    def __init__(self, n: int):
        self.n = n
        self.d = [0] * n
        self.d_self = [0] * n

    def total(self, u: int) -> int:
        return self.d[u] + self.d_self[u]

    def as_arrays(self) -> dict:
        return {
            "d": np.asarray(self.d, dtype=np.int64),
            "d_self": np.asarray(self.d_self, dtype=np.int64),
        }

    @classmethod
    def from_arrays(cls, d, d_self) -> "DegreeTable":
        table = cls(len(d))
        table.d = [int(x) for x in d]
        table.d_self = [int(x) for x in d_self]
        return table


class StreamSession:
    def __init__(self, n: int, mode: Mode | str, model: Model | str):
        if n < 1:
            raise StreamError(f"vertex count must be >= 1, got {n}")
        self.n = n
        self.mode = Mode(mode)
        self.model = Model(model)
        self.degrees = DegreeTable(n)
        self.forwarded = 0  # signed count of arc events sent downstream
        self.updates = 0
        self.closed = False
        self._consumers: list = []

    @property
    def directed(self) -> bool:
        return self.mode is Mode.DIRECTED

    def attach(self, consumer):
        if self.updates:
            raise StreamError("sketches must attach before the first update")
        if self.closed:
            raise StreamError("session is closed")
        self._consumers.append(consumer)
        return consumer

    def ingest(self, update: Update | Tuple[int, int, int]) -> None:
        if isinstance(update, Update):
            self.ingest_edge(update.tail, update.head, update.delta)
        else:
            self.ingest_edge(*update)

    def ingest_edge(self, u: int, v: int, delta: int = 1) -> None:
        # Negative multiplicities are the caller's contract violation; only
        # aggregate degrees are tracked so they cannot be detected here.
        if self.closed:
            raise StreamError("session is closed")
        n = self.n
        if not (0 <= u < n and 0 <= v < n):
            raise StreamError(f"endpoint out of range [0, {n}): ({u}, {v})")
        if delta != 1 and delta != -1:
            raise StreamError(f"delta must be +1 or -1, got {delta}")
        if delta == -1 and self.model is Model.INSERTION:
            raise StreamError("deletion in an insertion-only stream")
        self.updates += 1
        deg = self.degrees
        if u == v:
            deg.d_self[u] += delta if self.mode is Mode.DIRECTED else 2 * delta
            return
        consumers = self._consumers
        if self.mode is Mode.DIRECTED:
            deg.d[u] += delta
            self.forwarded += delta
            for c in consumers:
                c.on_arc(u, v, delta)
        else:
            deg.d[u] += delta
            deg.d[v] += delta
            self.forwarded += 2 * delta
            for c in consumers:
                c.on_arc(u, v, delta)
                c.on_arc(v, u, delta)

    def ingest_all(self, updates: Iterable) -> "StreamSession":
        for upd in updates:
            if isinstance(upd, Update):
                self.ingest_edge(upd.tail, upd.head, upd.delta)
            else:
                self.ingest_edge(*upd)
        return self

    def close(self) -> None:
        """Freeze the session and every attached sketch."""
        if self.closed:
            return
        self.closed = True
        for c in self._consumers:
            c.finalize()


def open_stream(n: int, mode: Mode | str = Mode.DIRECTED, model: Model | str = Model.INSERTION) -> StreamSession:
    return StreamSession(n, mode, model)


def parse_stream(lines: Iterable[str], n: int, model: Model | str = Model.INSERTION) -> Iterator[Tuple[int, int, int]]:
    """Yield ``(u, v, delta)`` triples from the text stream format.

    Insertion streams hold ``u v`` per line, turnstile streams ``u v +1`` or
    ``u v -1``.  Blank lines and ``#`` comments are skipped.
    """
    model = Model(model)
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if model is Model.INSERTION:
            if len(parts) != 2:
                raise StreamFormatError(lineno, f"expected 'u v', got {line!r}")
            delta = 1
        else:
            if len(parts) != 3:
                raise StreamFormatError(lineno, f"expected 'u v +1|-1', got {line!r}")
            if parts[2] not in ("+1", "-1", "1"):
                raise StreamFormatError(lineno, f"bad delta {parts[2]!r}")
            delta = -1 if parts[2] == "-1" else 1
        try:
            u, v = int(parts[0], 10), int(parts[1], 10)
        except ValueError:
            raise StreamFormatError(lineno, f"non-integer vertex id in {line!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise StreamFormatError(lineno, f"vertex id out of range [0, {n})")
        yield u, v, delta


def format_stream(updates: Iterable[Tuple[int, int, int]], model: Model | str, out: TextIO, header: Sequence[str] = ()) -> None:
    model = Model(model)
    for line in header:
        out.write(f"# {line}\n")
    for u, v, delta in updates:
        if model is Model.INSERTION:
            if delta != 1:
                raise StreamError("insertion-only streams cannot carry deletions")
            out.write(f"{u} {v}\n")
        else:
            out.write(f"{u} {v} {'+1' if delta > 0 else '-1'}\n")


def reinsert_self_loops(walk: Walk, degrees: DegreeTable, t: int, rng) -> Walk:
    """Turn a walk on the loopless graph into a t-step walk on the original.

    At each position on vertex ``u`` the walk stays at ``u`` with probability
    ``d_self(u) / (d(u) + d_self(u))``, otherwise it advances to the next
    vertex of ``walk``.  ``walk`` may stop early at a vertex with ``d(u) = 0``;
    loops at such a vertex absorb all remaining steps.
    """
    if walk is FAIL:
        return FAIL
    d, d_self = degrees.d, degrees.d_self
    out = [walk[0]]
    pos = 0
    last = len(walk) - 1
    rand = rng.random
    for _ in range(t):
        u = out[-1]
        loops = d_self[u]
        total = d[u] + loops
        if total == 0:
            return FAIL
        if loops and rand() * total < loops:
            out.append(u)
            continue
        if pos >= last:
            return FAIL
        pos += 1
        out.append(walk[pos])
    return tuple(out)


def walk_original(sketch, degrees: DegreeTable, v0: int, t: int, rng) -> Walk:
    """Query ``sketch`` on the loopless graph and restore self-loops."""
    if degrees.total(v0) == 0:
        return FAIL
    return reinsert_self_loops(sketch.walk(v0, t, rng, partial=True), degrees, t, rng)
