"""Candidate mining for under-represented homograph analyses.

Three stages over an untagged, line-per-sentence corpus:

1. Reservoir-sample sentences containing the target form (default 4000)
   for human annotation of the primary analysis.
2. Build a binary proxy training set: known primary instances against one
   of three opposing-class proxies (morphosyntactic-contrast word list,
   embedding-distant words, or random words), each example reduced to the
   four neighbors on either side of the target, never the target itself.
3. Train a BiLSTM window classifier and score every corpus occurrence of
   the form; occurrences that look like the opposing class are exported
   for annotation.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ProxyExhaustedError, TrainingError
from .expert import (
    ContextTokens,
    TokenContextClassifier,
    WordVectorTable,
    context_forward,
    create_token_context_classifier,
    train_token_context_classifier,
)
from .util import child_seed

log = logging.getLogger(__name__)

DEFAULT_INITIAL_SAMPLE = 4000
DEFAULT_WINDOW = 4
DEFAULT_THRESHOLD = 0.5
PRIMARY_CLASS = 0
OPPOSING_CLASS = 1


class ProxyKind(enum.Enum):
    MORPH_CONTRAST = "morph-contrast"  # unambiguous contrasting words (A)
    W2V_DISTANT = "w2v-distant"        # embedding-distant words (B)
    RANDOM = "random"                  # randomly selected words (C)


@dataclass(frozen=True)
class ProxySpec:
    kind: ProxyKind
    word_list: tuple[str, ...] = ()   # for MORPH_CONTRAST
    distance_count: int = 5           # for W2V_DISTANT
    sample_size: int = 100            # for RANDOM

    def describe(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.kind is ProxyKind.MORPH_CONTRAST:
            out["word_list"] = list(self.word_list)
        elif self.kind is ProxyKind.W2V_DISTANT:
            out["distance_count"] = self.distance_count
        else:
            out["sample_size"] = self.sample_size
        return out


@dataclass(frozen=True)
class MinedSentence:
    sentence_id: str
    tokens: tuple[str, ...]
    target_index: int


@dataclass(frozen=True)
class InitialSample:
    sentences: list[MinedSentence]
    requested: int
    shortfall: bool


@dataclass(frozen=True)
class MiningCandidate:
    sentence_id: str
    tokens: tuple[str, ...]
    target_index: int
    score: float
    provenance: dict


def iter_corpus(path: str | Path) -> Iterator[tuple[int, list[str]]]:
    """Yield (1-based line number, whitespace tokens), skipping blank lines."""
    with Path(path).open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            tokens = line.split()
            if tokens:
                yield lineno, tokens


def _occurrences(tokens: Sequence[str], form: str) -> list[int]:
    return [i for i, t in enumerate(tokens) if t == form]


def sample_initial(
    corpus_path: str | Path,
    form: str,
    n: int = DEFAULT_INITIAL_SAMPLE,
    seed: int = 0,
) -> InitialSample:
    """Uniform reservoir sample of corpus sentences containing the form.

    Each matching sentence is one reservoir item (target index at the
    form's first occurrence). Returns everything found plus a shortfall
    flag when the corpus has fewer than n matches.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    reservoir: list[MinedSentence] = []
    seen = 0
    for lineno, tokens in iter_corpus(corpus_path):
        hits = _occurrences(tokens, form)
        if not hits:
            continue
        item = MinedSentence(
            sentence_id=f"L{lineno}",
            tokens=tuple(tokens),
            target_index=hits[0],
        )
        seen += 1
        if len(reservoir) < n:
            reservoir.append(item)
        else:
            j = int(rng.integers(0, seen))
            if j < n:
                reservoir[j] = item
    return InitialSample(
        sentences=reservoir, requested=n, shortfall=seen < n
    )


def context_window(
    tokens: Sequence[str], target_index: int, width: int = DEFAULT_WINDOW
) -> list[str | None]:
    """width neighbors on either side of the target, excluding the target.

    Slots beyond the sentence edge are None and map to zero vectors.
    """
    window: list[str | None] = []
    for offset in range(-width, width + 1):
        if offset == 0:
            continue
        pos = target_index + offset
        window.append(tokens[pos] if 0 <= pos < len(tokens) else None)
    return window


def w2v_distant_words(
    table: WordVectorTable, form: str, count: int
) -> list[str]:
    """The count table tokens whose vectors are least cosine-similar to the form's."""
    target = table.get(form)
    if target is None:
        raise ProxyExhaustedError(
            f"form {form!r} is not in the word-vector table; the distant-word "
            f"proxy needs its vector"
        )
    tokens = [t for t in table.vectors if t != form]
    if not tokens:
        raise ProxyExhaustedError("word-vector table has no candidate tokens")
    mat = np.stack([table.vectors[t] for t in tokens]).astype(np.float64)
    target = target.astype(np.float64)
    norms = np.linalg.norm(mat, axis=1) * np.linalg.norm(target)
    sims = np.where(norms > 0, mat @ target / np.where(norms > 0, norms, 1.0), 0.0)
    order = np.argsort(sims, kind="stable")
    return [tokens[i] for i in order[: min(count, len(tokens))]]


def _resolve_proxy_words(
    proxy: ProxySpec,
    form: str,
    table: WordVectorTable,
    rng: np.random.Generator,
) -> list[str]:
    if proxy.kind is ProxyKind.MORPH_CONTRAST:
        if not proxy.word_list:
            raise ProxyExhaustedError(
                "morph-contrast proxy requires a non-empty word list"
            )
        return list(proxy.word_list)
    if proxy.kind is ProxyKind.W2V_DISTANT:
        return w2v_distant_words(table, form, proxy.distance_count)
    vocab = sorted(t for t in table.vectors if t != form)
    size = min(proxy.sample_size, len(vocab))
    if size == 0:
        raise ProxyExhaustedError("word-vector table has no candidate tokens")
    chosen = rng.choice(len(vocab), size=size, replace=False)
    return [vocab[i] for i in sorted(chosen)]


def build_proxy_training_set(
    primary_instances: Sequence[MinedSentence],
    proxy: ProxySpec,
    corpus_path: str | Path,
    table: WordVectorTable,
    seed: int,
    width: int = DEFAULT_WINDOW,
) -> list[tuple[ContextTokens, int]]:
    """Class-balanced (window, class) pairs for the proxy classifier.

    Primary windows come from the known primary instances; opposing
    windows come from corpus occurrences of the proxy words. The larger
    side is downsampled to the smaller.
    """
    if not primary_instances:
        raise TrainingError("no primary instances given")
    form = primary_instances[0].tokens[primary_instances[0].target_index]
    rng = np.random.default_rng(seed)
    proxy_words = set(_resolve_proxy_words(proxy, form, table, rng))

    primary = [
        (context_window(s.tokens, s.target_index, width), PRIMARY_CLASS)
        for s in primary_instances
    ]
    opposing: list[tuple[ContextTokens, int]] = []
    for _, tokens in iter_corpus(corpus_path):
        for i, tok in enumerate(tokens):
            if tok in proxy_words:
                opposing.append(
                    (context_window(tokens, i, width), OPPOSING_CLASS)
                )
    if not opposing:
        raise ProxyExhaustedError(
            f"proxy {proxy.kind.value!r} matched no corpus occurrences"
        )

    # Balance classes by downsampling the larger side.
    n = min(len(primary), len(opposing))
    if len(primary) > n:
        keep = sorted(rng.choice(len(primary), size=n, replace=False))
        primary = [primary[i] for i in keep]
    if len(opposing) > n:
        keep = sorted(rng.choice(len(opposing), size=n, replace=False))
        opposing = [opposing[i] for i in keep]
    return primary + opposing


def train_proxy_classifier(
    training_set: Sequence[tuple[ContextTokens, int]],
    table: WordVectorTable,
    seed: int,
) -> TokenContextClassifier:
    """Binary BiLSTM window classifier; it never sees the target token."""
    classes = {label for _, label in training_set}
    if classes != {PRIMARY_CLASS, OPPOSING_CLASS}:
        raise TrainingError(
            f"proxy training set must contain both classes, got {sorted(classes)}"
        )
    clf = create_token_context_classifier(
        table.dim, class_count=2, seed=child_seed(seed, 0)
    )
    train_token_context_classifier(
        clf, list(training_set), table, seed=child_seed(seed, 1)
    )
    return clf


def score_occurrence(
    clf: TokenContextClassifier,
    table: WordVectorTable,
    tokens: Sequence[str],
    target_index: int,
    width: int = DEFAULT_WINDOW,
) -> float:
    """Opposing-class probability for one occurrence."""
    probs = context_forward(clf, context_window(tokens, target_index, width), table)
    return float(probs[OPPOSING_CLASS])


def mine_candidates(
    clf: TokenContextClassifier,
    table: WordVectorTable,
    corpus_path: str | Path,
    form: str,
    threshold: float = DEFAULT_THRESHOLD,
    width: int = DEFAULT_WINDOW,
    provenance: dict | None = None,
) -> list[MiningCandidate]:
    """Score every corpus occurrence of the form; keep scores >= threshold.

    Results are sorted by descending score (ties keep corpus order).
    """
    provenance = provenance or {}
    candidates: list[MiningCandidate] = []
    for lineno, tokens in iter_corpus(corpus_path):
        for idx in _occurrences(tokens, form):
            score = score_occurrence(clf, table, tokens, idx, width)
            if score >= threshold:
                candidates.append(
                    MiningCandidate(
                        sentence_id=f"L{lineno}",
                        tokens=tuple(tokens),
                        target_index=idx,
                        score=score,
                        provenance=provenance,
                    )
                )
    candidates.sort(key=lambda c: -c.score)
    return candidates


def union_candidates(
    groups: Iterable[Sequence[MiningCandidate]],
) -> list[MiningCandidate]:
    """Merge per-proxy candidate lists, keeping the best score per occurrence."""
    best: dict[tuple[str, int], MiningCandidate] = {}
    for group in groups:
        for cand in group:
            key = (cand.sentence_id, cand.target_index)
            if key not in best or cand.score > best[key].score:
                best[key] = cand
    merged = list(best.values())
    merged.sort(key=lambda c: -c.score)
    return merged


def write_candidates(
    candidates: Sequence[MiningCandidate], path: str | Path
) -> None:
    with Path(path).open("w", encoding="utf-8") as f:
        for cand in candidates:
            f.write(
                json.dumps(
                    {
                        "sentence_id": cand.sentence_id,
                        "sentence": " ".join(cand.tokens),
                        "target_index": cand.target_index,
                        "score": cand.score,
                        "provenance": cand.provenance,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def read_candidates(path: str | Path) -> list[MiningCandidate]:
    out = []
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            out.append(
                MiningCandidate(
                    sentence_id=raw["sentence_id"],
                    tokens=tuple(raw["sentence"].split()),
                    target_index=raw["target_index"],
                    score=raw["score"],
                    provenance=raw.get("provenance", {}),
                )
            )
    return out
