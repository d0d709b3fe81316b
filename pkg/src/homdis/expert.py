"""Per-homograph word-expert classifiers.

Two flavors: a contextual expert (MLP over the target token's externally
computed embedding) and a non-contextual baseline (BiLSTM over the
word2vec vectors of every token except the target, feeding an MLP, with
a per-expert trainable UNK vector for out-of-vocabulary tokens).
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import ChallengeSet, LabeledSentence
from .embedio import AggregationStrategy, EmbeddingRecord, EmbeddingSet, aggregate_pieces
from .errors import (
    ConfigurationError,
    CorruptionError,
    CoverageError,
    DivergenceError,
    ShapeError,
    TrainingError,
    VersionError,
)
from .tinynn import (
    AdamState,
    BiLstmEncoder,
    LstmCell,
    MlpModel,
    bilstm_backward,
    bilstm_encode_cached,
    create_bilstm,
    create_mlp,
    load_checkpoint,
    mlp_forward,
    mlp_loss_grads,
    save_checkpoint,
    train_mlp,
)
from .util import child_seed

log = logging.getLogger(__name__)

WORD_VECTOR_MAGIC = b"HWV1"

TRAIN_EPOCHS = 3
LEARNING_RATE = 0.001
HIDDEN_SIZE = 100


# ---------------------------------------------------------------------------
# Word-vector table

@dataclass
class WordVectorTable:
    """Read-only token -> vector map shared across experts."""

    dim: int
    vectors: dict[str, np.ndarray]  # float32 rows of length dim

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, token: str) -> np.ndarray | None:
        return self.vectors.get(token)

    def coverage(self, tokens: Iterable[str]) -> float:
        """Fraction of (non-unique) tokens present in the table."""
        total = 0
        hit = 0
        for t in tokens:
            total += 1
            if t in self.vectors:
                hit += 1
        return hit / total if total else 0.0

    @classmethod
    def from_dict(cls, vectors: dict[str, np.ndarray]) -> "WordVectorTable":
        if not vectors:
            raise ConfigurationError("word-vector table is empty")
        dims = {np.asarray(v).shape for v in vectors.values()}
        if len(dims) != 1 or len(next(iter(dims))) != 1:
            raise ShapeError(f"inconsistent vector shapes in table: {sorted(dims)}")
        dim = next(iter(dims))[0]
        return cls(
            dim=int(dim),
            vectors={t: np.asarray(v, dtype=np.float32) for t, v in vectors.items()},
        )


def save_word_vectors(table: WordVectorTable, path: str | Path) -> None:
    with Path(path).open("wb") as f:
        f.write(WORD_VECTOR_MAGIC)
        f.write(struct.pack("<IQ", table.dim, len(table.vectors)))
        for token, vec in table.vectors.items():
            data = token.encode("utf-8")
            f.write(struct.pack("<H", len(data)))
            f.write(data)
            f.write(np.ascontiguousarray(vec, dtype="<f4").tobytes())


def load_word_vectors(path: str | Path) -> WordVectorTable:
    with Path(path).open("rb") as f:
        magic = f.read(4)
        if len(magic) != 4 or magic[:3] != WORD_VECTOR_MAGIC[:3]:
            raise CorruptionError(f"not a word-vector file: bad magic {magic!r}")
        if magic != WORD_VECTOR_MAGIC:
            raise VersionError(f"unsupported word-vector version {magic[3:]!r}")
        header = f.read(12)
        if len(header) != 12:
            raise CorruptionError("truncated word-vector header")
        dim, count = struct.unpack("<IQ", header)
        vectors: dict[str, np.ndarray] = {}
        for ordinal in range(1, count + 1):
            raw_len = f.read(2)
            if len(raw_len) != 2:
                raise CorruptionError(f"truncated at token record {ordinal}")
            (n,) = struct.unpack("<H", raw_len)
            token_bytes = f.read(n)
            blob = f.read(4 * dim)
            if len(token_bytes) != n or len(blob) != 4 * dim:
                raise CorruptionError(f"truncated at token record {ordinal}")
            vectors[token_bytes.decode("utf-8")] = np.frombuffer(
                blob, dtype="<f4"
            ).copy()
        if f.read(1):
            raise CorruptionError("trailing bytes after final token record")
    if count == 0:
        raise ConfigurationError(f"word-vector table {path} is empty")
    return WordVectorTable(dim=int(dim), vectors=vectors)


# ---------------------------------------------------------------------------
# Shared BiLSTM-over-token-context classifier core

ContextTokens = Sequence[str | None]  # None marks a zero-padded slot


@dataclass
class TokenContextClassifier:
    """BiLSTM over mapped context vectors feeding an MLP.

    Context tokens map to: the table vector when present, the trainable
    UNK vector otherwise, and a fixed zero vector for None padding slots.
    """

    encoder: BiLstmEncoder
    mlp: MlpModel
    unk: np.ndarray  # (table dim,) float64, trained per classifier

    @property
    def class_count(self) -> int:
        return self.mlp.class_count

    def parameters(self) -> dict[str, np.ndarray]:
        params = {f"enc.{k}": v for k, v in self.encoder.parameters().items()}
        params.update({f"mlp.{k}": v for k, v in self.mlp.parameters().items()})
        params["unk"] = self.unk
        return params


def create_token_context_classifier(
    input_dim: int, class_count: int, seed: int, hidden_size: int = HIDDEN_SIZE
) -> TokenContextClassifier:
    return TokenContextClassifier(
        encoder=create_bilstm(input_dim, hidden_size, child_seed(seed, 0)),
        mlp=create_mlp(2 * hidden_size, class_count, child_seed(seed, 1)),
        unk=np.zeros(input_dim, dtype=np.float64),
    )


def _context_vectors(
    clf: TokenContextClassifier, tokens: ContextTokens, table: WordVectorTable
) -> tuple[list[np.ndarray], list[int]]:
    vecs: list[np.ndarray] = []
    unk_positions: list[int] = []
    for pos, tok in enumerate(tokens):
        if tok is None:
            vecs.append(np.zeros(table.dim, dtype=np.float64))
            continue
        v = table.get(tok)
        if v is None:
            vecs.append(clf.unk)
            unk_positions.append(pos)
        else:
            vecs.append(v.astype(np.float64))
    return vecs, unk_positions


def context_forward(
    clf: TokenContextClassifier, tokens: ContextTokens, table: WordVectorTable
) -> np.ndarray:
    vecs, _ = _context_vectors(clf, tokens, table)
    encoding, _ = bilstm_encode_cached(clf.encoder, vecs)
    return mlp_forward(clf.mlp, encoding)


def _context_loss_grads(
    clf: TokenContextClassifier,
    tokens: ContextTokens,
    label: int,
    table: WordVectorTable,
) -> tuple[float, dict[str, np.ndarray]]:
    vecs, unk_positions = _context_vectors(clf, tokens, table)
    encoding, caches = bilstm_encode_cached(clf.encoder, vecs)
    loss, mlp_grads, d_encoding = mlp_loss_grads(clf.mlp, encoding, label)
    enc_grads, d_inputs = bilstm_backward(clf.encoder, caches, d_encoding)
    grads = {f"enc.{k}": v for k, v in enc_grads.items()}
    grads.update({f"mlp.{k}": v for k, v in mlp_grads.items()})
    d_unk = np.zeros_like(clf.unk)
    for pos in unk_positions:
        d_unk += d_inputs[pos]
    grads["unk"] = d_unk
    return loss, grads


def train_token_context_classifier(
    clf: TokenContextClassifier,
    examples: Sequence[tuple[ContextTokens, int]],
    table: WordVectorTable,
    seed: int,
    epochs: int = TRAIN_EPOCHS,
    learning_rate: float = LEARNING_RATE,
) -> TokenContextClassifier:
    """Joint per-example Adam training of encoder, MLP, and UNK vector."""
    params = clf.parameters()
    adam = AdamState.for_params(params, learning_rate=learning_rate)
    rng = np.random.default_rng(seed)
    step = 0
    for epoch in range(epochs):
        order = rng.permutation(len(examples))
        for idx in order:
            tokens, label = examples[idx]
            loss, grads = _context_loss_grads(clf, tokens, label, table)
            step += 1
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, step {step}"
                )
            adam.step(params, grads)
    return clf


# ---------------------------------------------------------------------------
# Contextual expert (MLP over provider embeddings)

@dataclass
class ContextualExpert:
    form: str
    mlp: MlpModel
    aggregation: AggregationStrategy
    masked: bool


def _check_missing_classes(
    cset: ChallengeSet, labels: Iterable[int], strict: bool, what: str
) -> None:
    present = set(labels)
    missing = [a.label_id for a in cset.analyses if a.label_id not in present]
    if not missing:
        return
    message = f"{cset.form!r}: no {what} examples for analyses {missing}"
    if strict:
        raise TrainingError(message)
    log.warning("%s (lenient mode, continuing)", message)


def train_contextual_expert(
    cset: ChallengeSet,
    embeddings: EmbeddingSet,
    train_ids: Sequence[str],
    aggregation: AggregationStrategy,
    seed: int,
    strict: bool = True,
    epochs: int = TRAIN_EPOCHS,
) -> ContextualExpert:
    """Train the per-homograph MLP on aggregated target-token embeddings."""
    if not train_ids:
        raise TrainingError(f"{cset.form!r}: empty training id list")
    missing = [sid for sid in train_ids if sid not in embeddings.records]
    if missing:
        raise CoverageError(
            f"{cset.form!r}: {len(missing)} training sentence(s) have no "
            f"embedding record: {missing[:5]}...",
            missing_ids=missing,
        )
    by_id = cset.by_id()
    unknown = [sid for sid in train_ids if sid not in by_id]
    if unknown:
        raise TrainingError(
            f"{cset.form!r}: train ids not in challenge set: {unknown[:5]}"
        )
    labels = [by_id[sid].label_id for sid in train_ids]
    _check_missing_classes(cset, labels, strict, "training")

    examples = [
        (aggregate_pieces(embeddings.records[sid], aggregation), label)
        for sid, label in zip(train_ids, labels)
    ]
    mlp = create_mlp(embeddings.dim, len(cset.analyses), seed=child_seed(seed, 0))
    train_mlp(mlp, examples, epochs=epochs, seed=child_seed(seed, 1))
    return ContextualExpert(
        form=cset.form,
        mlp=mlp,
        aggregation=aggregation,
        masked=embeddings.masked,
    )


def predict(
    expert: ContextualExpert, record: EmbeddingRecord
) -> tuple[int, np.ndarray]:
    """Argmax label (ties toward the lower label id) and the probability vector."""
    if record.dim != expert.mlp.input_dim:
        raise ShapeError(
            f"record dim {record.dim} does not match expert input dim "
            f"{expert.mlp.input_dim}"
        )
    x = aggregate_pieces(record, expert.aggregation)
    probs = mlp_forward(expert.mlp, x)
    return int(np.argmax(probs)), probs


# ---------------------------------------------------------------------------
# word2vec baseline expert (BiLSTM over context, target excluded)

@dataclass
class W2vBaselineExpert:
    form: str
    clf: TokenContextClassifier
    table: WordVectorTable


def sentence_context(sentence: LabeledSentence) -> list[str]:
    """All tokens except the target, in order."""
    return [
        t for i, t in enumerate(sentence.tokens) if i != sentence.target_index
    ]


def train_w2v_baseline(
    cset: ChallengeSet,
    table: WordVectorTable,
    train_ids: Sequence[str],
    seed: int,
    strict: bool = True,
    epochs: int = TRAIN_EPOCHS,
) -> W2vBaselineExpert:
    if len(table) == 0:
        raise ConfigurationError("word-vector table is empty")
    if not train_ids:
        raise TrainingError(f"{cset.form!r}: empty training id list")
    by_id = cset.by_id()
    unknown = [sid for sid in train_ids if sid not in by_id]
    if unknown:
        raise TrainingError(
            f"{cset.form!r}: train ids not in challenge set: {unknown[:5]}"
        )
    sentences = [by_id[sid] for sid in train_ids]
    _check_missing_classes(
        cset, (s.label_id for s in sentences), strict, "training"
    )
    examples = [(sentence_context(s), s.label_id) for s in sentences]
    clf = create_token_context_classifier(
        table.dim, len(cset.analyses), seed=child_seed(seed, 0)
    )
    train_token_context_classifier(
        clf, examples, table, seed=child_seed(seed, 1), epochs=epochs
    )
    return W2vBaselineExpert(form=cset.form, clf=clf, table=table)


def predict_baseline(
    expert: W2vBaselineExpert, sentence: LabeledSentence
) -> tuple[int, np.ndarray]:
    probs = context_forward(expert.clf, sentence_context(sentence), expert.table)
    return int(np.argmax(probs)), probs


# ---------------------------------------------------------------------------
# Expert checkpoints

def save_contextual_expert(expert: ContextualExpert, path: str | Path) -> None:
    meta = {
        "kind": "contextual_expert",
        "form": expert.form,
        "aggregation": expert.aggregation.value,
        "masked": expert.masked,
        "input_dim": expert.mlp.input_dim,
        "class_count": expert.mlp.class_count,
        "hidden_sizes": expert.mlp.hidden_sizes,
    }
    save_checkpoint(path, expert.mlp.parameters(), meta)


def _mlp_from_arrays(arrays: dict[str, np.ndarray], prefix: str = "") -> MlpModel:
    weights, biases = [], []
    i = 0
    while f"{prefix}w{i}" in arrays:
        weights.append(arrays[f"{prefix}w{i}"])
        biases.append(arrays[f"{prefix}b{i}"])
        i += 1
    if not weights:
        raise CorruptionError("checkpoint holds no MLP layers")
    return MlpModel(weights=weights, biases=biases)


def load_contextual_expert(path: str | Path) -> ContextualExpert:
    arrays, meta = load_checkpoint(path)
    if meta.get("kind") != "contextual_expert":
        raise CorruptionError(
            f"checkpoint kind {meta.get('kind')!r} is not a contextual expert"
        )
    return ContextualExpert(
        form=meta["form"],
        mlp=_mlp_from_arrays(arrays),
        aggregation=AggregationStrategy(meta["aggregation"]),
        masked=bool(meta["masked"]),
    )


def save_baseline_expert(expert: W2vBaselineExpert, path: str | Path) -> None:
    meta = {
        "kind": "w2v_baseline_expert",
        "form": expert.form,
        "input_dim": expert.clf.encoder.input_dim,
        "hidden_size": expert.clf.encoder.hidden_size,
        "class_count": expert.clf.class_count,
    }
    save_checkpoint(path, expert.clf.parameters(), meta)


def load_baseline_expert(
    path: str | Path, table: WordVectorTable
) -> W2vBaselineExpert:
    arrays, meta = load_checkpoint(path)
    if meta.get("kind") != "w2v_baseline_expert":
        raise CorruptionError(
            f"checkpoint kind {meta.get('kind')!r} is not a baseline expert"
        )
    encoder = BiLstmEncoder(
        fwd=LstmCell(arrays["enc.fwd.w"], arrays["enc.fwd.u"], arrays["enc.fwd.b"]),
        bwd=LstmCell(arrays["enc.bwd.w"], arrays["enc.bwd.u"], arrays["enc.bwd.b"]),
    )
    clf = TokenContextClassifier(
        encoder=encoder,
        mlp=_mlp_from_arrays(arrays, prefix="mlp."),
        unk=arrays["unk"],
    )
    return W2vBaselineExpert(form=meta["form"], clf=clf, table=table)
