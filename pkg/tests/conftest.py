"""Shared builders for synthetic challenge sets, embeddings, and tables."""

from __future__ import annotations

import numpy as np

from homdis.dataset import Analysis, ChallengeSet, LabeledSentence
from homdis.embedio import EmbeddingRecord, EmbeddingSet
from homdis.expert import WordVectorTable


def make_analyses(n: int, kind: str = "morph") -> tuple[Analysis, ...]:
    """n analyses whose ambiguity category is controlled by kind."""
    out = []
    for i in range(n):
        if kind == "seg":
            seg = 1 + (i % 2)
            feats = frozenset({"Noun"})
        elif kind == "morph":
            seg = 1
            feats = frozenset({"Noun", f"feat{i}"})
        elif kind == "sem":
            seg = 1
            feats = frozenset({"Noun", "M", "S"})
        else:
            raise ValueError(kind)
        out.append(
            Analysis(
                label_id=i,
                surface_key=f"surf{i}",
                segment_count=seg,
                morph_features=feats,
                gloss=f"gloss {i}",
            )
        )
    return tuple(out)


def make_cset(
    counts: list[int],
    seed: int = 0,
    form: str = "xyz",
    kind: str = "morph",
    skew_ratio: float | None = None,
    min_tokens: int = 3,
    max_tokens: int = 9,
) -> ChallengeSet:
    """Challenge set with counts[i] sentences for analysis i."""
    rng = np.random.default_rng(seed)
    analyses = make_analyses(len(counts), kind)
    sentences = []
    idx = 0
    for label, count in enumerate(counts):
        for _ in range(count):
            n_tokens = int(rng.integers(min_tokens, max_tokens + 1))
            tokens = [f"w{int(rng.integers(0, 50))}" for _ in range(n_tokens)]
            target = int(rng.integers(0, n_tokens))
            tokens[target] = form
            sentences.append(
                LabeledSentence(
                    sentence_id=f"s{idx}",
                    tokens=tuple(tokens),
                    target_index=target,
                    label_id=label,
                )
            )
            idx += 1
    if skew_ratio is None:
        skew_ratio = max(counts) / min(counts)
        approx = True
    else:
        approx = False
    return ChallengeSet(
        form=form,
        analyses=analyses,
        sentences=tuple(sentences),
        skew_ratio=float(skew_ratio),
        skew_ratio_approximate=approx,
    )


def make_embeddings(
    cset: ChallengeSet,
    dim: int = 16,
    seed: int = 0,
    masked: bool = False,
    pieces: int = 1,
    provider: str = "test-provider@last",
    class_sep: float = 6.0,
) -> EmbeddingSet:
    """Random class-clustered embeddings for every sentence of the set.

    Each label gets its own Gaussian cluster mean; multi-piece records
    carry the class vector in every piece so all aggregations preserve it
    (Sum scales by the piece count, which argmax-style consumers ignore).
    """
    rng = np.random.default_rng(seed)
    n_labels = len(cset.analyses)
    means = rng.normal(size=(n_labels, dim)) * class_sep
    records = []
    for s in cset.sentences:
        vec = means[s.label_id] + rng.normal(size=dim)
        n_pieces = 1 if masked else pieces
        stack = np.tile(vec, (n_pieces, 1)).astype(np.float32)
        records.append(
            EmbeddingRecord(sentence_id=s.sentence_id, pieces=stack, masked=masked)
        )
    return EmbeddingSet.from_records(provider, dim, masked, records)


def two_gaussian_clusters(
    dim: int = 768, n_per_class: int = 100, sep: float = 4.0, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Two isotropic Gaussian clusters with equal-norm means.

    sep is measured against the cluster RMS radius sigma*sqrt(dim); the
    Euclidean distance between the means is sep*sigma*sqrt(dim), i.e.
    roughly sep sigmas per coordinate. Means sit symmetrically about a
    common center orthogonal to their difference so both have equal norm
    (the dot-product centroid rule is sensitive to norm imbalance).
    """
    rng = np.random.default_rng(seed)
    center = rng.normal(size=dim)
    u = rng.normal(size=dim)
    u -= (u @ center) / (center @ center) * center
    u /= np.linalg.norm(u)
    half = 0.5 * sep * np.sqrt(dim)
    mu0 = center - half * u
    mu1 = center + half * u
    x0 = mu0 + rng.normal(size=(n_per_class, dim))
    x1 = mu1 + rng.normal(size=(n_per_class, dim))
    return x0, x1, mu0, mu1


def assert_separable(x0: np.ndarray, x1: np.ndarray) -> None:
    """Centroid-margin oracle: a linear separator must exist."""
    c0 = x0.mean(axis=0)
    c1 = x1.mean(axis=0)
    w = c1 - c0
    mid = (c0 + c1) / 2.0
    assert ((x0 - mid) @ w).max() < 0.0 < ((x1 - mid) @ w).min(), (
        "synthetic clusters are not linearly separable"
    )


def cluster_challenge_set(
    dim: int = 768,
    n_per_class: int = 100,
    sep: float = 4.0,
    seed: int = 0,
    form: str = "hom",
    provider: str = "synthetic@last",
) -> tuple[ChallengeSet, EmbeddingSet]:
    """Two-class challenge set whose embeddings are separable Gaussians."""
    x0, x1, _, _ = two_gaussian_clusters(dim, n_per_class, sep, seed)
    assert_separable(x0, x1)
    cset = make_cset([n_per_class, n_per_class], seed=seed, form=form)
    records = []
    data = np.concatenate([x0, x1])
    for s, vec in zip(cset.sentences, data):
        records.append(
            EmbeddingRecord(
                sentence_id=s.sentence_id,
                pieces=vec[None, :].astype(np.float32),
                masked=False,
            )
        )
    eset = EmbeddingSet.from_records(provider, dim, False, records)
    return cset, eset


def make_table(
    tokens: list[str], dim: int = 8, seed: int = 0
) -> WordVectorTable:
    rng = np.random.default_rng(seed)
    return WordVectorTable.from_dict(
        {t: rng.normal(size=dim).astype(np.float32) for t in tokens}
    )


def build_planted_corpus(
    path,
    n_sentences: int = 10_000,
    n_planted: int = 100,
    n_primary: int = 300,
    n_proxy: int = 200,
    seed: int = 0,
    dim: int = 32,
    form: str = "TGT",
    proxy_word: str = "QQQ",
    sentinel: str = "SSS",
    n_fillers: int = 300,
):
    """Synthetic mining corpus with planted opposing contexts.

    The target form occurs with ordinary filler contexts (primary usage)
    and, in the planted sentences, with sentinel-token contexts. The proxy
    word occurs in the same sentinel-rich contexts, standing in for the
    opposing class the way contrast words do for a real homograph.

    Returns (table, planted_ids, primary_sentences).
    """
    from homdis.mining import MinedSentence

    rng = np.random.default_rng(seed)
    fillers = [f"f{i}" for i in range(n_fillers)]

    vectors = {t: rng.normal(size=dim).astype(np.float32) for t in fillers}
    vectors[form] = rng.normal(size=dim).astype(np.float32)
    vectors[proxy_word] = rng.normal(size=dim).astype(np.float32)
    sentinel_vec = np.zeros(dim, dtype=np.float32)
    sentinel_vec[: dim // 2] = 4.0  # strong, distinctive direction
    vectors[sentinel] = sentinel_vec
    table = WordVectorTable.from_dict(vectors)

    def filler_run(k):
        return [fillers[int(i)] for i in rng.integers(0, n_fillers, size=k)]

    def plain_context(center):
        left = filler_run(4)
        right = filler_run(4)
        return left + [center] + right

    def sentinel_context(center):
        tokens = []
        for _ in range(4):
            tokens.append(sentinel if rng.random() < 0.6 else fillers[int(rng.integers(0, n_fillers))])
        tokens.append(center)
        for _ in range(4):
            tokens.append(sentinel if rng.random() < 0.6 else fillers[int(rng.integers(0, n_fillers))])
        return tokens

    special = n_planted + n_primary + n_proxy
    assert special < n_sentences
    kinds = ["planted"] * n_planted + ["primary"] * n_primary + ["proxy"] * n_proxy
    kinds += ["filler"] * (n_sentences - special)
    order = rng.permutation(n_sentences)
    kinds = [kinds[i] for i in order]

    planted_ids = []
    primary_sentences = []
    with open(path, "w", encoding="utf-8") as f:
        for lineno, kind in enumerate(kinds, start=1):
            if kind == "planted":
                tokens = sentinel_context(form)
                planted_ids.append(f"L{lineno}")
            elif kind == "primary":
                tokens = plain_context(form)
                primary_sentences.append(
                    MinedSentence(
                        sentence_id=f"L{lineno}",
                        tokens=tuple(tokens),
                        target_index=4,
                    )
                )
            elif kind == "proxy":
                tokens = sentinel_context(proxy_word)
            else:
                tokens = filler_run(int(rng.integers(5, 13)))
            f.write(" ".join(tokens) + "\n")
    return table, planted_ids, primary_sentences
