"""Small shared helpers: seeding and canonical JSON."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np


def child_seed(seed: int, *key: int) -> int:
    """Derive a stable sub-seed from a base seed and an integer key path.

    Uses numpy's SeedSequence spawn-key mechanism so nested components
    (per-fold, per-round, per-expert) never share streams by accident.
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


def rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def canonical_json(obj: Any) -> str:
    """Deterministic JSON used for every report and config artifact."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(canonical_json(obj), encoding="utf-8")


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))
