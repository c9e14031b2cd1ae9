"""Binary container for frozen sketches.

Layout::

    b"RWSK"  u16 version  u32 header_len  header (UTF-8 JSON)
    then, for every array named in header["arrays"]:
    u64 length  np.save payload

The header echoes the run configuration and the sketch's scalar metadata.
Arrays are written with ``allow_pickle=False``.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from typing import BinaryIO, TextIO

import numpy as np

from .registry import restore_sketch, sketch_arrays
from .stream import DegreeTable

MAGIC = b"RWSK"
VERSION = 1


class StateFileError(ValueError):
    pass


@dataclass
class SketchState:
    kind: str
    config: dict
    sketch: object
    degrees: DegreeTable


def _arrays_for(state: SketchState) -> tuple[dict, dict]:
    meta, arrays = sketch_arrays(state.sketch)
    deg = state.degrees.as_arrays()
    arrays = {**{f"sketch.{k}": v for k, v in arrays.items()},
              "degrees.d": deg["d"], "degrees.d_self": deg["d_self"]}
    return meta, arrays


def write_state(state: SketchState, fh: BinaryIO) -> None:
    meta, arrays = _arrays_for(state)
    header = {"kind": state.kind, "config": state.config, "meta": meta, "arrays": list(arrays)}
    raw = json.dumps(header, sort_keys=True).encode()
    fh.write(MAGIC)
    fh.write(struct.pack("<HI", VERSION, len(raw)))
    fh.write(raw)
    for name in header["arrays"]:
        buf = io.BytesIO()
        np.save(buf, np.ascontiguousarray(arrays[name]), allow_pickle=False)
        payload = buf.getvalue()
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(payload)


def _read_exact(fh: BinaryIO, size: int) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise StateFileError("truncated state file")
    return data


def _read_raw(fh: BinaryIO) -> tuple[dict, dict]:
    if _read_exact(fh, 4) != MAGIC:
        raise StateFileError("not a sketch state file (bad magic)")
    version, hlen = struct.unpack("<HI", _read_exact(fh, 6))
    if version != VERSION:
        raise StateFileError(f"unsupported state file version {version}")
    try:
        header = json.loads(_read_exact(fh, hlen))
    except json.JSONDecodeError as exc:
        raise StateFileError(f"corrupt header: {exc}") from None
    arrays = {}
    for name in header["arrays"]:
        (size,) = struct.unpack("<Q", _read_exact(fh, 8))
        arrays[name] = np.load(io.BytesIO(_read_exact(fh, size)), allow_pickle=False)
    return header, arrays


def read_state(fh: BinaryIO) -> SketchState:
    header, arrays = _read_raw(fh)
    sk_arrays = {k[len("sketch."):]: v for k, v in arrays.items() if k.startswith("sketch.")}
    sketch = restore_sketch(header["kind"], header["meta"], sk_arrays)
    degrees = DegreeTable.from_arrays(arrays["degrees.d"], arrays["degrees.d_self"])
    return SketchState(header["kind"], header["config"], sketch, degrees)


def save_state(state: SketchState, path) -> None:
    with open(path, "wb") as fh:
        write_state(state, fh)


def load_state(path) -> SketchState:
    with open(path, "rb") as fh:
        return read_state(fh)


def dump_state(path, out: TextIO, limit: int = 20) -> None:
    """Human-readable listing of a state file."""
    with open(path, "rb") as fh:
        header, arrays = _read_raw(fh)
    out.write(f"kind: {header['kind']}\n")
    out.write(f"config: {json.dumps(header['config'], sort_keys=True)}\n")
    out.write(f"meta: {json.dumps(header['meta'], sort_keys=True)}\n")
    for name, arr in arrays.items():
        out.write(f"{name}: dtype={arr.dtype} shape={arr.shape}\n")
        flat = arr.reshape(-1)
        if flat.size <= limit:
            out.write(f"  {flat.tolist()}\n")
        else:
            out.write(f"  {flat[:limit].tolist()} ... ({flat.size - limit} more)\n")
