"""Flat binary checkpoint of named float32 tensors.

Record layout, repeated until EOF (all integers little-endian uint32)::

    name_len | name (utf-8) | rank | dim_0 .. dim_{rank-1} | float32 payload

Hyperparameters go to a separate plain-text ``key = value`` manifest.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np


def save_tensors(path, tensors: Mapping[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        for name in sorted(tensors):
            arr = np.asarray(tensors[name], dtype="<f4", order="C")  # keeps 0-d scalars 0-d
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_tensors(path) -> dict[str, np.ndarray]:
    buf = Path(path).read_bytes()
    out: dict[str, np.ndarray] = {}
    pos = 0

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(buf):
            raise ValueError(f"truncated checkpoint {path}")
        vals = struct.unpack_from(fmt, buf, pos)
        pos += size
        return vals

    while pos < len(buf):
        (name_len,) = take("<I")
        name = buf[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (rank,) = take("<I")
        dims = take(f"<{rank}I") if rank else ()
        count = int(np.prod(dims)) if dims else 1
        nbytes = 4 * count
        if pos + nbytes > len(buf):
            raise ValueError(f"truncated payload for {name!r} in {path}")
        out[name] = np.frombuffer(buf, dtype="<f4", count=count, offset=pos).reshape(dims).astype(np.float32)
        pos += nbytes
    return out


def write_manifest(path, values: Mapping[str, object]) -> None:
    lines = [f"{k} = {values[k]}" for k in sorted(values)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out
