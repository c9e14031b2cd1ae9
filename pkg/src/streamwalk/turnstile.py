"""Turnstile sketches: l1 sampling, l1 heavy hitters and the two walkers.

l1 sampler
----------
Each sampler is R independent repetitions of the same linear structure:

* a keyed hash puts index ``i`` in the nested levels ``0..depth(i)``, where
  level ``l`` keeps each index with probability ``2**-l``;
* every level holds a ``rows x width`` table of cells
  ``(sum f_i, sum i*f_i, sum f_i*h(i) mod P)``, an exact sparse-recovery
  structure decoded by peeling 1-sparse cells (the third field is a
  fingerprint that rejects false decodes).

A query picks the shallowest level that decodes completely, draws a unit
``x`` uniformly from ``[0, ||f||_1)`` with hash randomness, and returns the
recovered index owning unit ``x``.  If ``x`` falls outside the recovered mass
the repetition fails and the next one is tried.  Which level decodes is a
symmetric function of the surviving indices, so every support index is
equally likely to be recovered and the output is exactly ``|f_j| / ||f||_1``
conditioned on success.  Success per repetition is 1 for supports that fit
in level 0 and about ``width / (2 * support)`` beyond that.

``||f||_1`` is read off the level-0 sums, so the sampler assumes the strict
turnstile model (all coordinates stay non-negative), as the walkers do.

All arithmetic is on integers: state is a linear function of the update
stream, and permuted or cancelled streams with the same net vector produce
bit-identical state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .insertion import capacity as make_capacity
from .samplers import ImportantArcStore
from .seeding import derive_seed, splitmix64, splitmix64_array
from .stream import FAIL, Mode, StreamError, StreamSession, Walk

P = (1 << 31) - 1
_QUERY_SALT = 0x5EED_0F_A11
_DEPTH_SALT = 0
_FP_SALT = 15
_ROW_SALT = 1


def repetitions_for(delta_s: float, universe: int, width: int) -> int:
    """Repetitions needed so one sampler fails with probability <= delta_s."""
    if not (0 < delta_s < 1):
        raise ValueError("delta_s must be in (0, 1)")
    # worst-case per-repetition success, measured over supports up to the
    # universe size (see tests/test_turnstile.py::test_repetition_success_floor)
    p = 0.9 if universe <= width else min(0.9, width / universe)
    return max(1, math.ceil(math.log(delta_s) / math.log1p(-p)))


def padded_universe(n: int, epsilon: float) -> int:
    """Run samplers over ceil(1/epsilon) coordinates when epsilon < 1/n."""
    return max(n, math.ceil(1 / epsilon)) if epsilon * n < 1 else n


@dataclass
class _IndexData:
    pos: np.ndarray  # flat offsets of the "sum" field in every member cell
    pos_ix: np.ndarray
    pos_fp: np.ndarray
    fp_vals: np.ndarray
    buckets: np.ndarray  # (count, R, rows)
    fp: np.ndarray  # (count, R)
    depth: np.ndarray  # (count, R)


def _salts(rows: int) -> np.ndarray:
    return np.array([_DEPTH_SALT, _FP_SALT] + [_ROW_SALT + r for r in range(rows)], dtype=np.uint64)


class L1SamplerBank:
    """``count`` independent l1 samplers over the same coordinate stream."""

    def __init__(self, count: int, universe: int, delta_s: float = 0.5, seed: int = 0,
                 rows: int = 3, width: int = 8):
        if count < 1 or universe < 1:
            raise ValueError("count and universe must be positive")
        self.count = count
        self.universe = universe
        self.delta_s = delta_s
        self.seed = seed
        self.rows = rows
        self.width = width
        self.repetitions = repetitions_for(delta_s, universe, width)
        self.levels = max(1, math.ceil(math.log2(universe))) + 2
        shape = (count, self.repetitions, self.levels, rows, width, 3)
        self.state = np.zeros(shape, dtype=np.int64)
        self._flat = self.state.reshape(-1)
        base = derive_seed(seed, 0x11)
        self._keys = splitmix64_array(
            np.uint64(base) + np.arange(count * self.repetitions, dtype=np.uint64)
        ).reshape(count, self.repetitions)
        self._query = splitmix64_array(self._keys ^ np.uint64(_QUERY_SALT))
        self._salts = _salts(rows)
        kr = np.arange(count * self.repetitions, dtype=np.int64).reshape(count, self.repetitions)
        # flat offset of (k, r, level 0, row, bucket 0, field 0)
        self._row_base = ((kr[:, :, None] * self.levels * rows + np.arange(rows)) * width) * 3
        self._level_stride = rows * width * 3
        self._cache: Dict[int, _IndexData] = {}
        self._results: Dict[int, Optional[int]] = {}

    def _index(self, i: int) -> _IndexData:
        data = self._cache.get(i)
        if data is not None:
            return data
        L = self.levels
        mixed = np.array([splitmix64((i << 5) | int(s)) for s in self._salts], dtype=np.uint64)
        h = splitmix64_array(self._keys[None, :, :] ^ mixed[:, None, None])
        u = ((h[0] >> np.uint64(11)).astype(np.float64) + 1.0) / 2.0**53
        depth = np.minimum(np.floor(-np.log2(u)), L - 1).astype(np.int64)
        fp = (h[1] % np.uint64(P - 1)).astype(np.int64) + 1
        buckets = np.moveaxis((h[2:] % np.uint64(self.width)).astype(np.int64), 0, -1)
        base = self._row_base + buckets * 3  # (count, R, rows)
        levels = np.arange(L)
        cells = base[..., None] + levels * self._level_stride  # (count, R, rows, L)
        member = np.broadcast_to((levels <= depth[:, :, None])[:, :, None, :], cells.shape)
        pos = cells[member]
        fp_vals = np.broadcast_to(fp[:, :, None, None], cells.shape)[member]
        data = _IndexData(pos, pos + 1, pos + 2, fp_vals, buckets, fp, depth)
        self._cache[i] = data
        return data

    def update(self, i: int, delta: int) -> None:
        if not (0 <= i < self.universe):
            raise IndexError(f"index {i} outside universe {self.universe}")
        if delta == 0:
            return
        data = self._index(i)
        flat = self._flat
        flat[data.pos] += delta
        flat[data.pos_ix] += delta * i
        q = data.pos_fp
        flat[q] = (flat[q] + (delta % P) * data.fp_vals) % P
        self._results.clear()

    def total(self, k: int = 0) -> int:
        """Sum of coordinates; equals ||f||_1 for non-negative vectors."""
        return int(self.state[k, 0, 0, 0, :, 0].sum())

    def _peel(self, k: int, r: int, level: int) -> Optional[Dict[int, int]]:
        cells = self.state[k, r, level].tolist()
        rows, width, U = self.rows, self.width, self.universe
        found: Dict[int, int] = {}
        progress = True
        while progress:
            progress = False
            for row in range(rows):
                line = cells[row]
                for b in range(width):
                    s, ix, f = line[b]
                    if s == 0 or ix % s:
                        continue
                    j = ix // s
                    if not (0 <= j < U):
                        continue
                    data = self._index(j)
                    bk = data.buckets[k, r]
                    if bk[row] != b or data.depth[k, r] < level:
                        continue
                    h = int(data.fp[k, r])
                    if f != (s * h) % P:
                        continue
                    found[j] = found.get(j, 0) + s
                    for row2 in range(rows):
                        c = cells[row2][int(bk[row2])]
                        c[0] -= s
                        c[1] -= s * j
                        c[2] = (c[2] - s * h) % P
                    progress = True
        for line in cells:
            for c in line:
                if c[0] or c[1] or c[2]:
                    return None
        return {j: v for j, v in found.items() if v}

    def query(self, k: int = 0) -> Optional[int]:
        """Sample index of sampler ``k`` or ``None`` (Fail)."""
        if k in self._results:
            return self._results[k]
        result = self._query_uncached(k)
        self._results[k] = result
        return result

    def _query_uncached(self, k: int) -> Optional[int]:
        total = self.total(k)
        if total <= 0:
            return None
        for r in range(self.repetitions):
            recovered = None
            for level in range(self.levels):
                recovered = self._peel(k, r, level)
                if recovered is not None:
                    break
            if not recovered:
                continue
            x = int(self._query[k, r]) % total
            acc = 0
            for j in sorted(recovered):
                f = recovered[j]
                if f < 0:
                    break
                acc += f
                if x < acc:
                    return j
        return None

    def words(self) -> int:
        return int(self.state.size)

    def arrays(self) -> dict:
        return {"state": self.state}

    def meta(self) -> dict:
        return {"count": self.count, "universe": self.universe, "delta_s": self.delta_s,
                "seed": self.seed, "rows": self.rows, "width": self.width}

    @classmethod
    def restore(cls, meta: dict, state: np.ndarray) -> "L1SamplerBank":
        bank = cls(meta["count"], meta["universe"], meta["delta_s"], meta["seed"], meta["rows"], meta["width"])
        if bank.state.shape != state.shape:
            raise ValueError(f"sampler state shape {state.shape} != expected {bank.state.shape}")
        bank.state[...] = state
        return bank


class L1Sampler:
    """A single l1 sampler: ``update(i, delta)`` and ``query() -> index | None``."""

    def __init__(self, universe: int, delta_s: float = 0.5, seed: int = 0, **kwargs):
        self.bank = L1SamplerBank(1, universe, delta_s, seed, **kwargs)

    def update(self, i: int, delta: int) -> None:
        self.bank.update(i, delta)

    def query(self) -> Optional[int]:
        return self.bank.query(0)

    @property
    def state(self) -> np.ndarray:
        return self.bank.state


def l1_update(s: L1Sampler, i: int, delta: int) -> None:
    s.update(i, delta)


def l1_query(s: L1Sampler) -> Optional[int]:
    return s.query()


class HHSketch:
    """l1 heavy hitters with one-sided (under-)estimates.

    A count-min table of width ``ceil(4 e k)`` over-estimates each coordinate
    by at most ``||f||_1 / (4k)`` per row with probability >= 1 - 1/e; the
    minimum over ``ceil(ln(universe / fail))`` rows holds for every coordinate
    except with probability ``fail``.  Reported estimates subtract that slack,
    so ``0 <= f_i - estimate <= ||f||_1 / (4k)``.  Candidates are found by
    scanning the universe at query time.  Assumes non-negative coordinates.
    """

    def __init__(self, universe: int, k: int, fail: float = 1e-3, seed: int = 0):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.universe = universe
        self.k = k
        self.fail = fail
        self.seed = seed
        self.width = math.ceil(4 * math.e * k)
        self.depth = max(1, math.ceil(math.log(universe / fail)))
        self.table = np.zeros((self.depth, self.width), dtype=np.int64)
        keys = splitmix64_array(np.uint64(derive_seed(seed, 0x22)) + np.arange(self.depth, dtype=np.uint64))
        ids = np.array([splitmix64(i) for i in range(universe)], dtype=np.uint64)
        self._buckets = (splitmix64_array(keys[:, None] ^ ids[None, :]) % np.uint64(self.width)).astype(np.int64)
        self._rows = np.arange(self.depth)

    def update(self, i: int, delta: int) -> None:
        self.table[self._rows, self._buckets[:, i]] += delta

    def estimates(self) -> np.ndarray:
        """Raw count-min over-estimates for every coordinate."""
        return self.table[self._rows[:, None], self._buckets].min(axis=0)

    def query(self, l1: int) -> List[Tuple[int, int]]:
        if l1 <= 0:
            return []
        raw = self.estimates()
        k = self.k
        slack = l1 // (4 * k)
        hits = np.nonzero(4 * k * raw > 3 * l1)[0]
        return [(int(i), int(raw[i]) - slack) for i in hits]


def hh_query(h: HHSketch, l1: int) -> List[Tuple[int, int]]:
    return h.query(l1)


def sampler_count(base: int, t: int, epsilon: float) -> int:
    """``ceil(2 * base + 16 log2(2t / epsilon))`` samplers per vertex."""
    return math.ceil(2 * base + 16 * math.log2(2 * t / epsilon))


class _BankedSketch:
    """Shared per-vertex sampler banks and success caching."""

    def __init__(self, n: int, t: int, epsilon: float, seed: int, count: int, delta_s: float):
        if not (0 < epsilon <= 1):
            raise ValueError("epsilon must be in (0, 1]")
        self.n = n
        self.t = t
        self.epsilon = epsilon
        self.seed = seed
        self.delta_s = delta_s
        self.count = count
        self.universe = padded_universe(n, epsilon)
        self.degree = [0] * n
        self.banks: List[Optional[L1SamplerBank]] = [None] * n
        self._succ: Dict[int, Tuple[List[int], int]] = {}

    def _bank(self, u: int) -> L1SamplerBank:
        bank = self.banks[u]
        if bank is None:
            bank = self.banks[u] = L1SamplerBank(self.count, self.universe, self.delta_s, derive_seed(self.seed, u))
        return bank

    def successes(self, u: int, need: int) -> List[int]:
        """First ``need`` successful sampler outputs of ``u`` (fewer if not available)."""
        found, nxt = self._succ.get(u, ([], 0))
        bank = self.banks[u]
        if bank is not None:
            while len(found) < need and nxt < self.count:
                out = bank.query(nxt)
                nxt += 1
                if out is not None:
                    found.append(out)
        self._succ[u] = (found, nxt)
        return found[:need]

    def stored_words(self) -> int:
        return sum(b.words() for b in self.banks if b is not None)

    def _bank_arrays(self) -> dict:
        # an all-zero bank equals a never-created one; omit it so that
        # streams with the same net graph serialise identically
        live = [b is not None and bool(b.state.any()) for b in self.banks]
        present = np.array(live, dtype=np.bool_)
        states = [b.state for b, keep in zip(self.banks, live) if keep]
        stacked = np.stack(states) if states else np.zeros((0,), dtype=np.int64)
        return {"bank_present": present, "bank_state": stacked}

    def _restore_banks(self, arrays: dict) -> None:
        present = arrays["bank_present"]
        it = iter(arrays["bank_state"])
        for u in range(self.n):
            if present[u]:
                bank = self._bank(u)
                state = next(it)
                if bank.state.shape != state.shape:
                    raise ValueError("sampler state shape mismatch")
                bank.state[...] = state


class TurnstileDirectedSketch(_BankedSketch):
    """Directed turnstile walker: C' l1 samplers per vertex over out-arcs.

    A vertex visited among the first t positions of the walk needs t
    successful samplers, otherwise the query fails.  The i-th visit follows
    the i-th successful sampler's output.
    """

    kind = "turnstile-directed"

    def __init__(self, n: int, t: int, epsilon: float, seed: int = 0, delta_s: float = 0.5):
        super().__init__(n, t, epsilon, seed, sampler_count(t, t, epsilon), delta_s)

    def on_arc(self, tail: int, head: int, delta: int) -> None:
        self.degree[tail] += delta
        self._bank(tail).update(head, delta)

    def finalize(self) -> None:
        pass

    def walk(self, v0: int, t: int | None = None, rng=None, partial: bool = False) -> Walk:
        t = self.t if t is None else t
        if t > self.t:
            raise ValueError(f"sketch built for {self.t} steps, asked for {t}")
        deg = self.degree
        visits: dict = {}
        u = v0
        out = [u]
        for _ in range(t):
            if deg[u] <= 0:
                return tuple(out) if partial else FAIL
            succ = self.successes(u, self.t)
            if len(succ) < self.t:
                return FAIL
            i = visits.get(u, 0)
            visits[u] = i + 1
            u = succ[i]
            out.append(u)
        return tuple(out)

    def arrays(self) -> dict:
        return {"degree": np.asarray(self.degree, dtype=np.int64), **self._bank_arrays()}

    def meta(self) -> dict:
        return {"n": self.n, "t": self.t, "epsilon": self.epsilon, "seed": self.seed, "delta_s": self.delta_s}

    @classmethod
    def restore(cls, meta: dict, arrays: dict) -> "TurnstileDirectedSketch":
        sk = cls(meta["n"], meta["t"], meta["epsilon"], meta["seed"], meta["delta_s"])
        sk.degree = [int(x) for x in arrays["degree"]]
        sk._restore_banks(arrays)
        return sk


class TurnstileUndirectedSketch(_BankedSketch):
    """Undirected turnstile walker.

    During the stream, arc ``(u, v, delta)`` updates ``u``'s samplers at
    coordinate ``v`` and ``v``'s heavy-hitter sketch at coordinate ``u``.
    :meth:`finalize` turns each heavy-hitter estimate ``A_v(u)`` into
    ``A_v(u)`` important copies of ``(u, v)`` and subtracts them from ``u``'s
    samplers, which then sample the unimportant arcs.  Queries follow the
    same important/unimportant split as :class:`UndirectedSketch`.
    """

    kind = "turnstile-undirected"

    def __init__(self, n: int, t: int, epsilon: float, seed: int = 0, delta_s: float = 0.5,
                 C: int | None = None):
        cap = C if C is not None else make_capacity(t, epsilon).C
        super().__init__(n, t, epsilon, seed, sampler_count(cap, t, epsilon), delta_s)
        self.C = cap
        self.hh_fail = epsilon * 1e-2
        self.hh: List[Optional[HHSketch]] = [None] * n
        self.E1: ImportantArcStore | None = None

    def _hh(self, v: int) -> HHSketch:
        h = self.hh[v]
        if h is None:
            h = self.hh[v] = HHSketch(self.universe, self.C, self.hh_fail, derive_seed(self.seed, 0x4848, v))
        return h

    def on_arc(self, tail: int, head: int, delta: int) -> None:
        if self.E1 is not None:
            raise StreamError("sketch is frozen")
        self.degree[head] += delta
        self._bank(tail).update(head, delta)
        self._hh(head).update(tail, delta)

    def finalize(self) -> None:
        if self.E1 is not None:
            return
        entries = []
        for v in range(self.n):
            h = self.hh[v]
            if h is None or self.degree[v] <= 0:
                continue
            for u, a in h.query(self.degree[v]):
                if a <= 0:
                    continue
                entries.append((u, v, a))
                self._bank(u).update(v, -a)
        self.E1 = ImportantArcStore(self.n, entries)
        self.hh = [None] * self.n

    def walk(self, v0: int, t: int | None, rng, partial: bool = False) -> Walk:
        self.finalize()
        t = self.t if t is None else t
        deg = self.degree
        E1 = self.E1
        d1 = E1.d1
        C = self.C
        rand = rng.random
        used: dict = {}
        u = v0
        out = [u]
        for _ in range(t):
            d = deg[u]
            if d <= 0:
                return tuple(out) if partial else FAIL
            if d > d1[u] and len(self.successes(u, C)) < C:
                return FAIL
            x = int(rand() * d) + 1
            if x <= d1[u]:
                u = E1.pick(u, x)
            else:
                j = used.get(u, 0) + 1
                if j > C:
                    return FAIL
                used[u] = j
                u = self.successes(u, C)[j - 1]
            out.append(u)
        return tuple(out)

    def arrays(self) -> dict:
        self.finalize()
        entries = np.array(self.E1.entries, dtype=np.int64).reshape(-1, 3)
        return {"degree": np.asarray(self.degree, dtype=np.int64), "e1": entries, **self._bank_arrays()}

    def meta(self) -> dict:
        return {"n": self.n, "t": self.t, "epsilon": self.epsilon, "seed": self.seed,
                "delta_s": self.delta_s, "C": self.C}

    @classmethod
    def restore(cls, meta: dict, arrays: dict) -> "TurnstileUndirectedSketch":
        sk = cls(meta["n"], meta["t"], meta["epsilon"], meta["seed"], meta["delta_s"], C=meta["C"])
        sk.degree = [int(x) for x in arrays["degree"]]
        sk._restore_banks(arrays)
        sk.E1 = ImportantArcStore(sk.n, [tuple(int(x) for x in row) for row in arrays["e1"]])
        sk.hh = [None] * sk.n
        return sk


def build_turnstile_directed(session: StreamSession, t: int, epsilon: float, seed: int = 0) -> TurnstileDirectedSketch:
    if session.mode is not Mode.DIRECTED:
        raise StreamError("turnstile directed sketch needs a directed session")
    return session.attach(TurnstileDirectedSketch(session.n, t, epsilon, seed))


def build_turnstile_undirected(session: StreamSession, t: int, epsilon: float, seed: int = 0,
                               C: int | None = None) -> TurnstileUndirectedSketch:
    if session.mode is not Mode.UNDIRECTED:
        raise StreamError("turnstile undirected sketch needs an undirected session")
    return session.attach(TurnstileUndirectedSketch(session.n, t, epsilon, seed, C=C))
