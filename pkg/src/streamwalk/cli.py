"""Command-line driver.

    streamwalk ingest --algo wr --t 4 --n 6 --in graph.txt --state g.sk
    streamwalk walk --state g.sk --start 0 --count 5 --seed 7
    streamwalk verify --suite perfect --trials 20000
    streamwalk gen --kind random-simple --n 5 --m 8 --seed 1 --out g.txt
    streamwalk dump --state g.sk

Query ``i`` of ``walk`` uses the random source ``make_rng(seed, i)``, so any
single query can be reproduced on its own.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from typing import List, Optional

from . import oracle
from .registry import ALGORITHMS, get_algorithm, space_report
from .seeding import make_rng
from .state import SketchState, StateFileError, dump_state, load_state, save_state
from .stream import FAIL, Mode, Model, StreamError, format_stream, open_stream, parse_stream, walk_original
from .verify import SUITES

log = logging.getLogger("streamwalk")


@contextmanager
def _open_text(path: Optional[str], mode: str):
    if path is None or path == "-":
        yield sys.stdout if "w" in mode else sys.stdin
    else:
        with open(path, mode) as fh:
            yield fh


def _header_n(lines: List[str]) -> Optional[int]:
    for line in lines:
        if not line.startswith("#"):
            break
        for tok in line[1:].split():
            if tok.startswith("n="):
                return int(tok[2:])
    return None


def cmd_ingest(args) -> int:
    algo = get_algorithm(args.algo, args.mode, args.model)
    with _open_text(args.input, "r") as fh:
        lines = fh.readlines()
    n = args.n if args.n is not None else _header_n(lines)
    if n is None:
        raise StreamError("vertex count unknown: pass --n or use a stream with an '# n=...' header")
    session = open_stream(n, algo.mode, algo.model)
    sketch = algo.build(session, args.t, args.epsilon, make_rng(args.seed))
    for u, v, delta in parse_stream(lines, n, algo.model):
        session.ingest_edge(u, v, delta)
    session.close()
    log.debug("ingested %d updates into %s sketch", session.updates, algo.name)
    config = {"algo": algo.name, "mode": algo.mode.value, "model": algo.model.value,
              "t": args.t, "epsilon": args.epsilon, "seed": args.seed, "n": n}
    save_state(SketchState(algo.name, config, sketch, session.degrees), args.state)
    report = {"updates": session.updates, **space_report(sketch)}
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_walk(args) -> int:
    st = load_state(args.state)
    n = st.degrees.n
    if not (0 <= args.start < n):
        raise StreamError(f"start vertex {args.start} outside [0, {n})")
    if args.count < 0:
        raise StreamError("count must be >= 0")
    t = st.config["t"] if args.t is None else args.t
    with _open_text(args.out, "w") as out:
        for i in range(args.count):
            w = walk_original(st.sketch, st.degrees, args.start, t, make_rng(args.seed, i))
            out.write("FAIL\n" if w is FAIL else " ".join(map(str, w)) + "\n")
    return 0


def cmd_verify(args) -> int:
    suite = SUITES[args.suite]
    params = {"trials": args.trials, "seed": args.seed}
    if args.t is not None:
        params["t"] = args.t
    if args.epsilon is not None and args.suite in ("epsilon", "failure", "turnstile-equiv", "self-loops"):
        params["epsilon"] = args.epsilon
    try:
        checks = suite(**params)
    except ValueError as exc:
        print(json.dumps({"name": f"{args.suite}/guard", "value": None, "bound": None,
                          "pass": False, "error": str(exc)}))
        return 1
    ok = True
    for c in checks:
        rec = {"name": c.name, "value": c.value, "bound": c.bound, "pass": c.passed}
        print(json.dumps(rec))
        ok &= c.passed
    return 0 if ok else 1


def cmd_gen(args) -> int:
    kind = args.kind
    if kind == "gadget-undirected":
        g = oracle.gen_gadget_undirected(args.t, groups=args.groups, seed=args.seed)
        n, mode, stream = g.graph.n, Mode.UNDIRECTED, g.stream
    elif kind == "gadget-directed":
        if args.n is None:
            raise ValueError("gadget-directed needs --n")
        g = oracle.gen_gadget_directed(args.n, args.t, seed=args.seed)
        n, mode, stream = g.graph.n, Mode.DIRECTED, g.stream
    else:
        if args.n is None or args.m is None:
            raise ValueError(f"{kind} needs --n and --m")
        mode = Mode(args.mode or "undirected")
        n = args.n
        stream = oracle.random_graph(n, args.m, mode is Mode.DIRECTED, seed=args.seed,
                                     multi=(kind == "random-multi"))
    header = [f"n={n} mode={mode.value}", f"kind={kind} seed={args.seed}"]
    with _open_text(args.out, "w") as out:
        format_stream(stream, Model.INSERTION, out, header)
    return 0


def cmd_dump(args) -> int:
    dump_state(args.state, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="streamwalk", description="Random walks from one pass over an edge stream.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ing = sub.add_parser("ingest", help="build a sketch from a stream and save it")
    ing.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    ing.add_argument("--mode", choices=[m.value for m in Mode])
    ing.add_argument("--model", choices=[m.value for m in Model])
    ing.add_argument("--t", type=int, required=True)
    ing.add_argument("--epsilon", type=float, default=0.25)
    ing.add_argument("--seed", type=int, default=0)
    ing.add_argument("--n", type=int)
    ing.add_argument("--in", dest="input", default="-")
    ing.add_argument("--state", required=True)
    ing.set_defaults(func=cmd_ingest)

    wk = sub.add_parser("walk", help="query walks from a saved sketch")
    wk.add_argument("--state", required=True)
    wk.add_argument("--start", type=int, required=True)
    wk.add_argument("--count", type=int, default=1)
    wk.add_argument("--seed", type=int, default=0)
    wk.add_argument("--t", type=int)
    wk.add_argument("--out", default="-")
    wk.set_defaults(func=cmd_walk)

    vf = sub.add_parser("verify", help="run a verification suite against the exact oracle")
    vf.add_argument("--suite", required=True, choices=sorted(SUITES))
    vf.add_argument("--trials", type=int, default=20000)
    vf.add_argument("--seed", type=int, default=0)
    vf.add_argument("--t", type=int)
    vf.add_argument("--epsilon", type=float)
    vf.set_defaults(func=cmd_verify)

    gn = sub.add_parser("gen", help="write a generated graph as a stream")
    gn.add_argument("--kind", required=True,
                    choices=["gadget-directed", "gadget-undirected", "random-simple", "random-multi"])
    gn.add_argument("--mode", choices=[m.value for m in Mode])
    gn.add_argument("--n", type=int)
    gn.add_argument("--m", type=int)
    gn.add_argument("--t", type=int, default=16)
    gn.add_argument("--groups", type=int, default=1)
    gn.add_argument("--seed", type=int, default=0)
    gn.add_argument("--out", default="-")
    gn.set_defaults(func=cmd_gen)

    dp = sub.add_parser("dump", help="print a state file in readable form")
    dp.add_argument("--state", required=True)
    dp.set_defaults(func=cmd_dump)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (StreamError, StateFileError, ValueError, OSError) as exc:
        print(f"streamwalk: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
