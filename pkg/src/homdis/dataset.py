"""Challenge-set data model: loading, validation, folds, and few-shot splits.

The on-disk format is line-delimited JSON (UTF-8). The first record is a
header carrying the homograph form and its analysis inventory; every
following record is one labeled sentence:

    {"form": ..., "analyses": [{"label_id": 0, "surface_key": ...,
     "segment_count": 1, "morph_features": [...], "gloss": ...}, ...],
     "skew_ratio": 3.5, "skew_ratio_approximate": false}
    {"sentence_id": "s1", "tokens": [...], "target_index": 2, "label": 0}

Sentence labels are analysis label_ids; the reserved string labels
"none of the above" and "unclear" mark records that are dropped (and
counted) at load time. Tokens are pre-tokenized whitespace units.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InsufficientDataError,
    ParseError,
    SamplingError,
    SchemaError,
    StratificationError,
)

DROP_LABELS = {"none of the above", "none_of_the_above", "unclear"}

MIN_ANALYSES = 2
MAX_ANALYSES = 5


class AmbiguityCategory(enum.Enum):
    SEGMENTATION = "segmentation"
    MORPHOSYNTACTIC = "morphosyntactic"
    SEMANTIC = "semantic"


@dataclass(frozen=True)
class Analysis:
    """One concrete reading of a homograph."""

    label_id: int
    surface_key: str
    segment_count: int
    morph_features: frozenset[str]
    gloss: str = ""

    def __post_init__(self):
        if self.segment_count < 1:
            raise SchemaError(
                f"analysis {self.surface_key!r}: segment_count must be >= 1"
            )


@dataclass(frozen=True)
class LabeledSentence:
    sentence_id: str
    tokens: tuple[str, ...]
    target_index: int
    label_id: int

    def __post_init__(self):
        if not 0 <= self.target_index < len(self.tokens):
            raise SchemaError(
                f"sentence {self.sentence_id!r}: target_index {self.target_index} "
                f"out of range for {len(self.tokens)} tokens"
            )


@dataclass(frozen=True)
class ChallengeSet:
    """A homograph's labeled sentences plus its analysis inventory."""

    form: str
    analyses: tuple[Analysis, ...]
    sentences: tuple[LabeledSentence, ...]
    skew_ratio: float
    skew_ratio_approximate: bool = False
    dropped_count: int = field(default=0, compare=False)

    def __post_init__(self):
        labels = [a.label_id for a in self.analyses]
        if labels != list(range(len(labels))):
            raise SchemaError(
                f"analysis label_ids must be contiguous from 0, got {labels}"
            )
        if not MIN_ANALYSES <= len(self.analyses) <= MAX_ANALYSES:
            raise SchemaError(
                f"{self.form!r}: expected {MIN_ANALYSES}-{MAX_ANALYSES} analyses, "
                f"got {len(self.analyses)}"
            )
        if self.skew_ratio <= 0:
            raise SchemaError(f"{self.form!r}: skew_ratio must be positive")
        known = {a.label_id for a in self.analyses}
        for s in self.sentences:
            if s.label_id not in known:
                raise SchemaError(
                    f"sentence {s.sentence_id!r} references unknown label "
                    f"{s.label_id}"
                )

    @property
    def category(self) -> AmbiguityCategory:
        return classify_ambiguity(self.analyses)

    @property
    def label_ids(self) -> list[int]:
        return [a.label_id for a in self.analyses]

    def label_counts(self) -> dict[int, int]:
        counts = {a.label_id: 0 for a in self.analyses}
        for s in self.sentences:
            counts[s.label_id] += 1
        return counts

    def sentences_for(self, label_id: int) -> list[LabeledSentence]:
        return [s for s in self.sentences if s.label_id == label_id]

    def by_id(self) -> dict[str, LabeledSentence]:
        return {s.sentence_id: s for s in self.sentences}


@dataclass(frozen=True)
class FoldPlan:
    """Deterministic stratified assignment of sentence ids to folds."""

    seed: int
    k: int
    assignment: dict[str, int]

    def members(self, fold: int) -> list[str]:
        return [sid for sid, f in self.assignment.items() if f == fold]


def classify_ambiguity(analyses: Sequence[Analysis]) -> AmbiguityCategory:
    """Categorize by the highest level of ambiguity among the analyses.

    Any difference in segment_count wins; otherwise any difference in
    morphological features; otherwise the analyses differ only in sense.
    """
    if len(analyses) < 2:
        raise ValueError("classify_ambiguity requires at least 2 analyses")
    first = analyses[0]
    if any(a.segment_count != first.segment_count for a in analyses[1:]):
        return AmbiguityCategory.SEGMENTATION
    if any(a.morph_features != first.morph_features for a in analyses[1:]):
        return AmbiguityCategory.MORPHOSYNTACTIC
    return AmbiguityCategory.SEMANTIC


def _parse_analysis(raw: dict, position: int) -> Analysis:
    try:
        label_id = int(raw.get("label_id", position))
        features = raw.get("morph_features", [])
        if not isinstance(features, (list, tuple)):
            raise TypeError("morph_features must be a list")
        return Analysis(
            label_id=label_id,
            surface_key=str(raw["surface_key"]),
            segment_count=int(raw["segment_count"]),
            morph_features=frozenset(str(f) for f in features),
            gloss=str(raw.get("gloss", "")),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"bad analysis record at position {position}: {e}", line=1)


def load_challenge_set(path: str | Path) -> ChallengeSet:
    """Load and validate one challenge set from a JSONL file.

    Records labeled "none of the above" or "unclear" are dropped and
    counted in the returned set's dropped_count.
    """
    path = Path(path)
    header = None
    analyses: list[Analysis] = []
    sentences: list[LabeledSentence] = []
    seen_ids: set[str] = set()
    dropped = 0

    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", line=lineno)
            if not isinstance(raw, dict):
                raise ParseError("record must be a JSON object", line=lineno)

            if header is None:
                if "form" not in raw or "analyses" not in raw:
                    raise ParseError(
                        "first record must be a header with 'form' and 'analyses'",
                        line=lineno,
                    )
                header = raw
                analyses = [
                    _parse_analysis(a, i) for i, a in enumerate(raw["analyses"])
                ]
                continue

            try:
                sid = str(raw["sentence_id"])
                tokens = raw["tokens"]
                target_index = int(raw["target_index"])
                label = raw["label"]
                if not isinstance(tokens, list) or not tokens:
                    raise TypeError("tokens must be a non-empty list")
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(f"malformed sentence record: {e}", line=lineno)

            if isinstance(label, str):
                if label.strip().lower() in DROP_LABELS:
                    dropped += 1
                    continue
                raise SchemaError(
                    f"line {lineno}: label {label!r} references no known analysis"
                )
            label_id = int(label)
            if label_id not in {a.label_id for a in analyses}:
                raise SchemaError(
                    f"line {lineno}: label {label_id} references no known analysis"
                )
            if sid in seen_ids:
                raise SchemaError(f"line {lineno}: duplicate sentence_id {sid!r}")
            seen_ids.add(sid)
            try:
                sentences.append(
                    LabeledSentence(
                        sentence_id=sid,
                        tokens=tuple(str(t) for t in tokens),
                        target_index=target_index,
                        label_id=label_id,
                    )
                )
            except SchemaError as e:
                raise SchemaError(f"line {lineno}: {e}")

    if header is None:
        raise ParseError("file contains no records", line=1)

    counts = {a.label_id: 0 for a in analyses}
    for s in sentences:
        counts[s.label_id] += 1
    populated = sum(1 for c in counts.values() if c > 0)
    if populated < MIN_ANALYSES:
        raise InsufficientDataError(
            f"{header['form']!r}: only {populated} analysis(es) have sentences; "
            f"need at least {MIN_ANALYSES}"
        )
    empty = sorted(l for l, c in counts.items() if c == 0)
    if empty:
        raise InsufficientDataError(
            f"{header['form']!r}: analyses {empty} have no sentences"
        )

    skew = header.get("skew_ratio")
    if skew is None:
        skew = max(counts.values()) / min(counts.values())
        approximate = True
    else:
        skew = float(skew)
        approximate = bool(header.get("skew_ratio_approximate", False))

    cset = ChallengeSet(
        form=str(header["form"]),
        analyses=tuple(analyses),
        sentences=tuple(sentences),
        skew_ratio=skew,
        skew_ratio_approximate=approximate,
        dropped_count=dropped,
    )

    declared = header.get("category")
    if declared is not None and str(declared) != cset.category.value:
        raise SchemaError(
            f"{cset.form!r}: declared category {declared!r} does not match "
            f"computed {cset.category.value!r}"
        )
    return cset


def save_challenge_set(cset: ChallengeSet, path: str | Path) -> None:
    """Write a challenge set in the JSONL format read by load_challenge_set."""
    header = {
        "form": cset.form,
        "analyses": [
            {
                "label_id": a.label_id,
                "surface_key": a.surface_key,
                "segment_count": a.segment_count,
                "morph_features": sorted(a.morph_features),
                "gloss": a.gloss,
            }
            for a in cset.analyses
        ],
        "skew_ratio": cset.skew_ratio,
        "skew_ratio_approximate": cset.skew_ratio_approximate,
        "category": cset.category.value,
    }
    with Path(path).open("w", encoding="utf-8") as f:
        f.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
        for s in cset.sentences:
            rec = {
                "sentence_id": s.sentence_id,
                "tokens": list(s.tokens),
                "target_index": s.target_index,
                "label": s.label_id,
            }
            f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def plan_folds(
    cset: ChallengeSet, k: int, seed: int, strict: bool = True
) -> FoldPlan:
    """Plan a deterministic stratified k-fold split.

    Per analysis label the fold sizes differ by at most one. Under strict
    mode a label with fewer than k sentences is an error; lenient mode
    shrinks k to the smallest label count instead.
    """
    if k < 2:
        raise ValueError(f"fold count must be >= 2, got {k}")
    counts = cset.label_counts()
    min_count = min(counts.values())
    if min_count < k:
        if strict:
            scarce = {l: c for l, c in counts.items() if c < k}
            raise StratificationError(
                f"{cset.form!r}: labels {scarce} have fewer than k={k} sentences"
            )
        k = min_count
        if k < 2:
            raise StratificationError(
                f"{cset.form!r}: cannot stratify, smallest label has "
                f"{min_count} sentence(s)"
            )

    rng = np.random.default_rng(seed)
    assignment: dict[str, int] = {}
    for label in sorted(counts):
        ids = [s.sentence_id for s in cset.sentences if s.label_id == label]
        order = rng.permutation(len(ids))
        for pos, idx in enumerate(order):
            assignment[ids[idx]] = pos % k
    # Re-key in dataset order so downstream iteration is stable.
    assignment = {s.sentence_id: assignment[s.sentence_id] for s in cset.sentences}
    return FoldPlan(seed=seed, k=k, assignment=assignment)


def sample_fewshot(
    cset: ChallengeSet, n_per_analysis: int, seed: int
) -> tuple[list[LabeledSentence], list[LabeledSentence]]:
    """Sample n training sentences per analysis; the remainder is the test set.

    Sampling is uniform without replacement and deterministic in the seed.
    Every analysis must have strictly more than n_per_analysis sentences so
    the test set covers every analysis.
    """
    if n_per_analysis < 1:
        raise SamplingError(
            f"n_per_analysis must be >= 1, got {n_per_analysis}"
        )
    counts = cset.label_counts()
    short = {l: c for l, c in counts.items() if c <= n_per_analysis}
    if short:
        raise SamplingError(
            f"{cset.form!r}: labels {short} have too few sentences to sample "
            f"{n_per_analysis} and keep a non-empty test remainder"
        )
    rng = np.random.default_rng(seed)
    train_ids: set[str] = set()
    for label in sorted(counts):
        ids = [s.sentence_id for s in cset.sentences if s.label_id == label]
        chosen = rng.choice(len(ids), size=n_per_analysis, replace=False)
        train_ids.update(ids[i] for i in chosen)
    train = [s for s in cset.sentences if s.sentence_id in train_ids]
    test = [s for s in cset.sentences if s.sentence_id not in train_ids]
    return train, test


def manifest_entry(path: str | Path, cset: ChallengeSet) -> dict:
    counts = cset.label_counts()
    return {
        "path": str(path),
        "form": cset.form,
        "category": cset.category.value,
        "analysis_count": len(cset.analyses),
        "sentence_count": len(cset.sentences),
        "per_label_counts": {str(l): c for l, c in sorted(counts.items())},
        "skew_ratio": cset.skew_ratio,
        "skew_ratio_approximate": cset.skew_ratio_approximate,
        "dropped_count": cset.dropped_count,
    }


def build_manifest(entries: Iterable[dict]) -> dict:
    return {"schema_version": 1, "kind": "dataset_manifest", "sets": list(entries)}
