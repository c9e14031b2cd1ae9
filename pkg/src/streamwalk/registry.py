"""The five supported (algorithm, mode, model) pairings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from .insertion import (
    DirectedSketchWOR,
    DirectedSketchWR,
    UndirectedSketch,
    build_directed_wor,
    build_directed_wr,
    build_undirected,
    capacity,
)
from .samplers import ImportantArcStore
from .stream import Mode, Model
from .turnstile import (
    TurnstileDirectedSketch,
    TurnstileUndirectedSketch,
    build_turnstile_directed,
    build_turnstile_undirected,
)


@dataclass(frozen=True)
class Algorithm:
    name: str
    mode: Mode
    model: Model
    # build(session, t, epsilon, rng) attaches a fresh sketch to the session
    build: Callable


def _wr(session, t, epsilon, rng):
    return build_directed_wr(session, t, rng)


def _wor(session, t, epsilon, rng):
    return build_directed_wor(session, t, rng)


def _undirected(session, t, epsilon, rng):
    return build_undirected(session, capacity(t, epsilon), rng)


def _t_directed(session, t, epsilon, rng):
    return build_turnstile_directed(session, t, epsilon, rng.getrandbits(64))


def _t_undirected(session, t, epsilon, rng):
    return build_turnstile_undirected(session, t, epsilon, rng.getrandbits(64))


ALGORITHMS: Dict[str, Algorithm] = {
    a.name: a
    for a in (
        Algorithm("wr", Mode.DIRECTED, Model.INSERTION, _wr),
        Algorithm("wor", Mode.DIRECTED, Model.INSERTION, _wor),
        Algorithm("undirected-sketch", Mode.UNDIRECTED, Model.INSERTION, _undirected),
        Algorithm("turnstile-directed", Mode.DIRECTED, Model.TURNSTILE, _t_directed),
        Algorithm("turnstile-undirected", Mode.UNDIRECTED, Model.TURNSTILE, _t_undirected),
    )
}


def get_algorithm(name: str, mode: Mode | str | None = None, model: Model | str | None = None) -> Algorithm:
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    algo = ALGORITHMS[name]
    if mode is not None and Mode(mode) is not algo.mode:
        raise ValueError(f"{name} runs in {algo.mode.value} mode, not {Mode(mode).value}")
    if model is not None and Model(model) is not algo.model:
        raise ValueError(f"{name} runs in the {algo.model.value} model, not {Model(model).value}")
    return algo


# --- array round-trip for the insertion sketches ---------------------------

def _cells(rows, width: int) -> np.ndarray:
    out = np.full((len(rows), width), -1, dtype=np.int64)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            if x is not None:
                out[i, j] = x
    return out


def sketch_arrays(sk) -> tuple[dict, dict]:
    """``(meta, arrays)`` describing a frozen sketch of any kind."""
    if isinstance(sk, (TurnstileDirectedSketch, TurnstileUndirectedSketch)):
        return sk.meta(), sk.arrays()
    if isinstance(sk, DirectedSketchWR):
        return ({"n": sk.n, "t": sk.t},
                {"degree": np.asarray(sk.out_degree, dtype=np.int64),
                 "cells": _cells([s.cells for s in sk.samplers], sk.t),
                 "seen": np.asarray([s.seen for s in sk.samplers], dtype=np.int64)})
    if isinstance(sk, DirectedSketchWOR):
        return ({"n": sk.n, "t": sk.t},
                {"degree": np.asarray(sk.out_degree, dtype=np.int64),
                 "held": _cells([r.held for r in sk.reservoirs], sk.t),
                 "seen": np.asarray([r.seen for r in sk.reservoirs], dtype=np.int64)})
    if isinstance(sk, UndirectedSketch):
        sk.finalize()
        return ({"n": sk.n, "C": sk.C},
                {"degree": np.asarray(sk.degree, dtype=np.int64),
                 "cells": _cells([s.cells for s in sk.samplers], sk.C),
                 "seen": np.asarray([s.seen for s in sk.samplers], dtype=np.int64),
                 "e1": np.array(sk.E1.entries, dtype=np.int64).reshape(-1, 3)})
    raise TypeError(f"unsupported sketch type {type(sk).__name__}")


def restore_sketch(kind: str, meta: dict, arrays: dict):
    if kind == "turnstile-directed":
        return TurnstileDirectedSketch.restore(meta, arrays)
    if kind == "turnstile-undirected":
        return TurnstileUndirectedSketch.restore(meta, arrays)
    if kind == "wr":
        sk = DirectedSketchWR(meta["n"], meta["t"], None)
        sk.out_degree = [int(x) for x in arrays["degree"]]
        for s, row, seen in zip(sk.samplers, arrays["cells"], arrays["seen"]):
            s.seen = int(seen)
            s.cells = [int(x) if x >= 0 else None for x in row]
        return sk
    if kind == "wor":
        sk = DirectedSketchWOR(meta["n"], meta["t"], None)
        sk.out_degree = [int(x) for x in arrays["degree"]]
        for r, row, seen in zip(sk.reservoirs, arrays["held"], arrays["seen"]):
            r.seen = int(seen)
            r.held = [int(x) for x in row if x >= 0]
        return sk
    if kind == "undirected-sketch":
        sk = UndirectedSketch(meta["n"], meta["C"], None)
        sk.degree = [int(x) for x in arrays["degree"]]
        for s, row, seen in zip(sk.samplers, arrays["cells"], arrays["seen"]):
            s.seen = int(seen)
            s.cells = [int(x) if x >= 0 else None for x in row]
        sk.tables = None
        sk.E1 = ImportantArcStore(sk.n, [tuple(int(x) for x in row) for row in arrays["e1"]])
        return sk
    raise ValueError(f"unknown sketch kind {kind!r}")


def space_report(sk) -> dict:
    """Counts of stored items (not bytes)."""
    if isinstance(sk, DirectedSketchWR):
        return {"samples": sk.stored_items()}
    if isinstance(sk, DirectedSketchWOR):
        return {"samples": sk.stored_items()}
    if isinstance(sk, UndirectedSketch):
        sk.finalize()
        return {
            "e1_arcs": len(sk.E1),
            "e1_multiplicity": sk.E1.total_multiplicity(),
            "sampler_entries": sum(s.filled() for s in sk.samplers),
            "budget_2nC": 2 * sk.n * sk.C,
        }
    if isinstance(sk, TurnstileUndirectedSketch):
        sk.finalize()
        return {"e1_arcs": len(sk.E1), "e1_multiplicity": sk.E1.total_multiplicity(),
                "samplers_per_vertex": sk.count, "sketch_words": sk.stored_words()}
    return {"samplers_per_vertex": sk.count, "sketch_words": sk.stored_words()}
