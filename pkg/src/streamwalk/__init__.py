"""Random-walk simulation from a single pass over a graph edge stream."""

from .insertion import (
    Capacity,
    DirectedSketchWOR,
    DirectedSketchWR,
    UndirectedSketch,
    build_directed_wor,
    build_directed_wr,
    build_undirected,
    capacity,
    simulate_random_walk,
    walk_directed_wor,
    walk_directed_wr,
)
from .stream import FAIL, DegreeTable, Mode, Model, StreamError, open_stream, reinsert_self_loops, walk_original
from .turnstile import (
    HHSketch,
    L1Sampler,
    TurnstileDirectedSketch,
    TurnstileUndirectedSketch,
    build_turnstile_directed,
    build_turnstile_undirected,
)

__all__ = [
    "FAIL", "Capacity", "DegreeTable", "DirectedSketchWOR", "DirectedSketchWR", "HHSketch", "L1Sampler",
    "Mode", "Model", "StreamError", "TurnstileDirectedSketch", "TurnstileUndirectedSketch", "UndirectedSketch",
    "build_directed_wor", "build_directed_wr", "build_turnstile_directed", "build_turnstile_undirected",
    "build_undirected", "capacity", "open_stream", "reinsert_self_loops", "simulate_random_walk",
    "walk_directed_wor", "walk_directed_wr", "walk_original",
]

__version__ = "0.1.0"
