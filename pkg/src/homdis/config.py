"""Experiment configuration with a round-trippable key=value text format.

Each line is `key = <JSON value>`; blank lines and `#` comments are
ignored. Serialization writes keys sorted and only the fields that are
set, so serialize -> parse -> serialize is a fixed point. Every command
writes its resolved configuration next to its outputs, and accepts the
same file back via --config to reproduce the run.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError

OUTDIR_ENV = "HOMDIS_OUTDIR"


@dataclass
class ExperimentConfig:
    command: str | None = None
    sets: list[str] | None = None
    manifest: str | None = None
    emb: str | None = None
    emb_dir: str | None = None
    vectors: str | None = None
    mode: str | None = None
    aggregation: str | None = None
    metric: str | None = None
    masked: bool | None = None
    k: int | None = None
    n: list[int] | None = None
    rounds: int | None = None
    seed: int | None = None
    strict: bool | None = None
    jobs: int | None = None
    out: str | None = None
    # mining
    corpus: str | None = None
    form: str | None = None
    primary: str | None = None
    proxy: list[str] | None = None
    proxy_words: str | None = None
    distance_count: int | None = None
    sample_size: int | None = None
    threshold: float | None = None
    pooled: bool | None = None
    initial_sample: int | None = None
    # reporting
    reports: list[str] | None = None
    dimension: str | None = None
    skew_edges: list[float] | None = None
    # gradcheck
    instances: int | None = None
    tolerance: float | None = None

    def to_text(self) -> str:
        lines = []
        for f in sorted(dataclasses.fields(self), key=lambda f: f.name):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {json.dumps(value, ensure_ascii=False)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        values: dict = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigurationError(
                    f"config line {lineno}: expected 'key = value', got {raw!r}"
                )
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ConfigurationError(f"config line {lineno}: unknown key {key!r}")
            try:
                values[key] = json.loads(value.strip())
            except json.JSONDecodeError as e:
                raise ConfigurationError(
                    f"config line {lineno}: bad value for {key!r}: {e.msg}"
                )
        return cls(**values)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    def merged_over(self, base: "ExperimentConfig") -> "ExperimentConfig":
        """This config's set fields layered over the base's."""
        values = {}
        for f in dataclasses.fields(self):
            mine = getattr(self, f.name)
            values[f.name] = mine if mine is not None else getattr(base, f.name)
        return ExperimentConfig(**values)
