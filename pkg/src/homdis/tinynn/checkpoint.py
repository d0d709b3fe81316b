"""Versioned binary checkpoints: named float64 arrays plus a JSON header.

Layout: magic b"HNC1", u32 header length, UTF-8 JSON header
{"version", "meta", "arrays": [{"name", "shape"}]}, then each array's
raw little-endian float64 bytes in header order. Roundtrips bit-exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import CorruptionError, VersionError

MAGIC = b"HNC1"


def save_checkpoint(
    path: str | Path, arrays: dict[str, np.ndarray], meta: dict[str, Any] | None = None
) -> None:
    entries = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        entries.append({"name": name, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = json.dumps(
        {"version": 1, "meta": meta or {}, "arrays": entries},
        sort_keys=True,
        ensure_ascii=False,
    ).encode("utf-8")
    with Path(path).open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    with Path(path).open("rb") as f:
        magic = f.read(4)
        if len(magic) != 4 or magic[:3] != MAGIC[:3]:
            raise CorruptionError(f"not a checkpoint file: bad magic {magic!r}")
        if magic != MAGIC:
            raise VersionError(f"unsupported checkpoint version {magic[3:]!r}")
        raw_len = f.read(4)
        if len(raw_len) != 4:
            raise CorruptionError("truncated checkpoint header length")
        (header_len,) = struct.unpack("<I", raw_len)
        raw = f.read(header_len)
        if len(raw) != header_len:
            raise CorruptionError("truncated checkpoint header")
        try:
            header = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CorruptionError(f"unreadable checkpoint header: {e}")
        arrays: dict[str, np.ndarray] = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            blob = f.read(8 * count)
            if len(blob) != 8 * count:
                raise CorruptionError(
                    f"truncated checkpoint array {entry['name']!r}"
                )
            arrays[entry["name"]] = np.frombuffer(blob, dtype="<f8").reshape(shape).copy()
        if f.read(1):
            raise CorruptionError("trailing bytes after final array")
    return arrays, header.get("meta", {})
