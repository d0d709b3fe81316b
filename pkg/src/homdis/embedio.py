"""Portable target-token embedding files and word-piece aggregation.

The "HXE1" binary layout (all integers little-endian):

    magic    4 bytes  b"HXE1"
    provider u16 length + UTF-8 bytes
    dim      u32
    masked   u8 (0 or 1)
    count    u64
    records  count * [sentence_id u16 length + UTF-8,
                      piece_count u16,
                      piece_count * dim float32]

Only the target token's pieces are stored, never the whole sentence.
Vectors are float32 on disk and widened to float64 by aggregation.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable

import numpy as np

from .errors import CorruptionError, SchemaError, VersionError

MAGIC = b"HXE1"


class AggregationStrategy(enum.Enum):
    FIRST = "first"
    SUM = "sum"
    AVERAGE = "average"


@dataclass(eq=False)
class EmbeddingRecord:
    """Per-sentence word-piece vectors for one target token."""

    sentence_id: str
    pieces: np.ndarray  # shape (piece_count, dim), float32
    masked: bool

    def __post_init__(self):
        self.pieces = np.asarray(self.pieces, dtype=np.float32)
        if self.pieces.ndim != 2 or self.pieces.shape[0] == 0:
            raise SchemaError(
                f"record {self.sentence_id!r}: pieces must be a non-empty "
                f"(piece_count, dim) array"
            )
        if self.masked and self.pieces.shape[0] != 1:
            raise SchemaError(
                f"record {self.sentence_id!r}: masked records must have exactly "
                f"one piece, got {self.pieces.shape[0]}"
            )

    @property
    def piece_count(self) -> int:
        return int(self.pieces.shape[0])

    @property
    def dim(self) -> int:
        return int(self.pieces.shape[1])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EmbeddingRecord)
            and self.sentence_id == other.sentence_id
            and self.masked == other.masked
            and self.pieces.shape == other.pieces.shape
            and np.array_equal(self.pieces, other.pieces)
        )


@dataclass(eq=False)
class EmbeddingSet:
    """Provider-stamped collection of embedding records, keyed by sentence id."""

    provider: str
    dim: int
    masked: bool
    records: dict[str, EmbeddingRecord]

    def __post_init__(self):
        for rec in self.records.values():
            if rec.dim != self.dim:
                raise SchemaError(
                    f"record {rec.sentence_id!r} has dim {rec.dim}, "
                    f"set header says {self.dim}"
                )
            if rec.masked != self.masked:
                raise SchemaError(
                    f"record {rec.sentence_id!r} masked={rec.masked} conflicts "
                    f"with set header masked={self.masked}"
                )

    @classmethod
    def from_records(
        cls, provider: str, dim: int, masked: bool,
        records: Iterable[EmbeddingRecord],
    ) -> "EmbeddingSet":
        return cls(provider, dim, masked, {r.sentence_id: r for r in records})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EmbeddingSet)
            and self.provider == other.provider
            and self.dim == other.dim
            and self.masked == other.masked
            and self.records == other.records
        )

    def __len__(self) -> int:
        return len(self.records)

    def piece_count_mode(self) -> int:
        """Most common piece count across records (1 when empty)."""
        if not self.records:
            return 1
        counts: dict[int, int] = {}
        for rec in self.records.values():
            counts[rec.piece_count] = counts.get(rec.piece_count, 0) + 1
        # Highest frequency, smallest piece count on ties.
        return min(counts, key=lambda c: (-counts[c], c))


def _write_str(f: BinaryIO, s: str) -> None:
    data = s.encode("utf-8")
    if len(data) > 0xFFFF:
        raise SchemaError(f"string too long for u16 length prefix: {len(data)}")
    f.write(struct.pack("<H", len(data)))
    f.write(data)


def write_embedding_set(eset: EmbeddingSet, path: str | Path) -> None:
    with Path(path).open("wb") as f:
        f.write(MAGIC)
        _write_str(f, eset.provider)
        f.write(struct.pack("<IBQ", eset.dim, int(eset.masked), len(eset.records)))
        for rec in eset.records.values():
            if rec.dim != eset.dim:
                raise CorruptionError(
                    f"record {rec.sentence_id!r}: dim {rec.dim} != header "
                    f"{eset.dim}"
                )
            _write_str(f, rec.sentence_id)
            f.write(struct.pack("<H", rec.piece_count))
            f.write(
                np.ascontiguousarray(rec.pieces, dtype="<f4").tobytes()
            )


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise CorruptionError(f"truncated file while reading {what}")
    return data


def _read_str(f: BinaryIO, what: str) -> str:
    (n,) = struct.unpack("<H", _read_exact(f, 2, what))
    return _read_exact(f, n, what).decode("utf-8")


def read_embedding_set(path: str | Path) -> EmbeddingSet:
    with Path(path).open("rb") as f:
        magic = f.read(4)
        if len(magic) != 4 or magic[:3] != MAGIC[:3]:
            raise CorruptionError(f"not an embedding file: bad magic {magic!r}")
        if magic != MAGIC:
            raise VersionError(
                f"unsupported embedding format version {magic[3:]!r}"
            )
        provider = _read_str(f, "header provider")
        dim, masked, count = struct.unpack(
            "<IBQ", _read_exact(f, 13, "header")
        )
        records: dict[str, EmbeddingRecord] = {}
        for ordinal in range(1, count + 1):
            what = f"record {ordinal} of {count}"
            try:
                sid = _read_str(f, what)
                (piece_count,) = struct.unpack("<H", _read_exact(f, 2, what))
                if piece_count == 0:
                    raise CorruptionError(f"{what}: zero piece count")
                raw = _read_exact(f, 4 * dim * piece_count, what)
            except CorruptionError as e:
                raise CorruptionError(f"{what}: {e}") from None
            pieces = np.frombuffer(raw, dtype="<f4").reshape(piece_count, dim)
            records[sid] = EmbeddingRecord(
                sentence_id=sid, pieces=pieces.copy(), masked=bool(masked)
            )
        trailing = f.read(1)
        if trailing:
            raise CorruptionError("trailing bytes after final record")
    return EmbeddingSet(
        provider=provider, dim=dim, masked=bool(masked), records=records
    )


def aggregate_pieces(
    record: EmbeddingRecord, strategy: AggregationStrategy
) -> np.ndarray:
    """Collapse a record's word-piece vectors to one float64 vector.

    First takes pieces[0]; Sum and Average are elementwise. A single-piece
    record yields the piece unchanged under every strategy, and Average is
    exactly Sum divided by the piece count.
    """
    pieces = record.pieces.astype(np.float64)
    if strategy is AggregationStrategy.FIRST:
        return pieces[0].copy()
    if strategy is AggregationStrategy.SUM:
        return pieces.sum(axis=0)
    if strategy is AggregationStrategy.AVERAGE:
        return pieces.sum(axis=0) / pieces.shape[0]
    raise ValueError(f"unknown aggregation strategy: {strategy!r}")


def describe(eset: EmbeddingSet) -> dict:
    return {
        "provider": eset.provider,
        "dim": eset.dim,
        "masked": eset.masked,
        "count": len(eset.records),
        "piece_count_mode": eset.piece_count_mode(),
    }
