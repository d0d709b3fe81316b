"""Experiment harness: k-fold CV, few-shot rounds, and breakdown reports.

Scoring follows the micro-then-macro protocol: per-analysis precision and
recall are computed from confusion counts accumulated across all folds,
and the reported score is the unweighted mean of the per-analysis F1
values over every analysis the homograph defines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from .dataset import ChallengeSet, LabeledSentence, plan_folds, sample_fewshot
from .embedio import AggregationStrategy, EmbeddingSet
from .errors import CoverageError, HomdisError
from .expert import (
    WordVectorTable,
    predict,
    predict_baseline,
    train_contextual_expert,
    train_w2v_baseline,
)
from .probe import classify_centroid, fit_centroids
from .util import child_seed, read_json, write_json

Predictor = Callable[[LabeledSentence], int]


# ---------------------------------------------------------------------------
# Metrics

@dataclass
class ConfusionAccumulator:
    """Per-label TP/FP/FN counts accumulated across folds."""

    labels: list[int]
    tp: dict[int, int] = field(default_factory=dict)
    fp: dict[int, int] = field(default_factory=dict)
    fn: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        for l in self.labels:
            self.tp.setdefault(l, 0)
            self.fp.setdefault(l, 0)
            self.fn.setdefault(l, 0)

    def add(self, gold: int, pred: int) -> None:
        if gold not in self.tp or pred not in self.tp:
            raise ValueError(f"labels ({gold}, {pred}) outside {self.labels}")
        if gold == pred:
            self.tp[gold] += 1
        else:
            self.fp[pred] += 1
            self.fn[gold] += 1

    def total(self) -> int:
        return sum(self.tp.values()) + sum(self.fn.values())


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    support: float   # gold count (TP + FN)
    predicted: float  # prediction count (TP + FP)
    zero_support: bool


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def micro_f1_per_analysis(acc: ConfusionAccumulator) -> dict[int, LabelMetrics]:
    """P/R/F1 from the accumulated counts; 0/0 denominators yield 0."""
    out: dict[int, LabelMetrics] = {}
    for l in acc.labels:
        tp, fp, fn = acc.tp[l], acc.fp[l], acc.fn[l]
        p = _safe_div(tp, tp + fp)
        r = _safe_div(tp, tp + fn)
        f1 = _safe_div(2 * p * r, p + r)
        out[l] = LabelMetrics(
            precision=p,
            recall=r,
            f1=f1,
            support=tp + fn,
            predicted=tp + fp,
            zero_support=(tp + fn) == 0,
        )
    return out


def macro_f1(per_label_f1: Sequence[float]) -> float:
    """Unweighted mean over all analyses, zero-support ones included."""
    if len(per_label_f1) == 0:
        raise ValueError("macro_f1 of an empty list")
    return float(np.mean(per_label_f1))


# ---------------------------------------------------------------------------
# Scenarios

class Scenario(Protocol):
    kind: str
    default_fewshot_rounds: int

    def describe(self) -> dict: ...

    def check_coverage(self, cset: ChallengeSet) -> None: ...

    def fit(
        self, cset: ChallengeSet, train: Sequence[LabeledSentence], seed: int
    ) -> Predictor: ...


def _check_embedding_coverage(cset: ChallengeSet, embeddings: EmbeddingSet) -> None:
    missing = [
        s.sentence_id for s in cset.sentences
        if s.sentence_id not in embeddings.records
    ]
    if missing:
        raise CoverageError(
            f"{cset.form!r}: {len(missing)} sentence(s) lack embedding "
            f"records: {missing[:5]}...",
            missing_ids=missing,
        )


@dataclass
class ContextualMlpScenario:
    """MLP word expert over provider embeddings (the contextual setup)."""

    embeddings: EmbeddingSet
    aggregation: AggregationStrategy = AggregationStrategy.FIRST
    strict: bool = True
    kind: str = field(default="contextual", init=False)
    default_fewshot_rounds: int = field(default=10, init=False)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "provider": self.embeddings.provider,
            "masked": self.embeddings.masked,
            "aggregation": self.aggregation.value,
            "piece_count_mode": self.embeddings.piece_count_mode(),
        }

    def check_coverage(self, cset: ChallengeSet) -> None:
        _check_embedding_coverage(cset, self.embeddings)

    def fit(
        self, cset: ChallengeSet, train: Sequence[LabeledSentence], seed: int
    ) -> Predictor:
        expert = train_contextual_expert(
            cset,
            self.embeddings,
            [s.sentence_id for s in train],
            self.aggregation,
            seed=seed,
            strict=self.strict,
        )
        records = self.embeddings.records

        def predictor(sentence: LabeledSentence) -> int:
            return predict(expert, records[sentence.sentence_id])[0]

        return predictor


@dataclass
class W2vBaselineScenario:
    """BiLSTM-over-word2vec baseline; the target token is excluded."""

    table: WordVectorTable
    strict: bool = True
    kind: str = field(default="baseline", init=False)
    default_fewshot_rounds: int = field(default=10, init=False)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "provider": f"w2v-table(dim={self.table.dim},tokens={len(self.table)})",
            "masked": None,
            "aggregation": None,
        }

    def check_coverage(self, cset: ChallengeSet) -> None:
        return None

    def fit(
        self, cset: ChallengeSet, train: Sequence[LabeledSentence], seed: int
    ) -> Predictor:
        expert = train_w2v_baseline(
            cset,
            self.table,
            [s.sentence_id for s in train],
            seed=seed,
            strict=self.strict,
        )

        def predictor(sentence: LabeledSentence) -> int:
            return predict_baseline(expert, sentence)[0]

        return predictor


@dataclass
class CentroidScenario:
    """Raw-embedding probe: dot product against per-analysis centroids."""

    embeddings: EmbeddingSet
    aggregation: AggregationStrategy = AggregationStrategy.FIRST
    metric: str = "dot"
    kind: str = field(default="centroid", init=False)
    default_fewshot_rounds: int = field(default=200, init=False)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "provider": self.embeddings.provider,
            "masked": self.embeddings.masked,
            "aggregation": self.aggregation.value,
            "metric": self.metric,
            "piece_count_mode": self.embeddings.piece_count_mode(),
        }

    def check_coverage(self, cset: ChallengeSet) -> None:
        _check_embedding_coverage(cset, self.embeddings)

    def fit(
        self, cset: ChallengeSet, train: Sequence[LabeledSentence], seed: int
    ) -> Predictor:
        records = self.embeddings.records
        model = fit_centroids(
            [(records[s.sentence_id], s.label_id) for s in train],
            self.aggregation,
        )

        def predictor(sentence: LabeledSentence) -> int:
            return classify_centroid(
                model, records[sentence.sentence_id], self.aggregation, self.metric
            )

        return predictor


@dataclass
class ConstantScenario:
    """Always predicts one label; used for metric sanity checks."""

    label: int
    kind: str = field(default="constant", init=False)
    default_fewshot_rounds: int = field(default=10, init=False)

    def describe(self) -> dict:
        return {"kind": self.kind, "label": self.label}

    def check_coverage(self, cset: ChallengeSet) -> None:
        return None

    def fit(
        self, cset: ChallengeSet, train: Sequence[LabeledSentence], seed: int
    ) -> Predictor:
        return lambda sentence: self.label


# ---------------------------------------------------------------------------
# Reports

@dataclass
class EvalReport:
    mode: str  # "cv" | "fewshot"
    labels: list[int]
    per_label: dict[int, LabelMetrics]
    macro_f1: float
    scenario: dict
    params: dict
    set_info: dict
    rounds: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "eval_report",
            "mode": self.mode,
            "labels": self.labels,
            "per_label": {
                str(l): {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                    "predicted": m.predicted,
                    "zero_support": m.zero_support,
                }
                for l, m in self.per_label.items()
            },
            "macro_f1": self.macro_f1,
            "scenario": self.scenario,
            "params": self.params,
            "set_info": self.set_info,
            "rounds": self.rounds,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "EvalReport":
        per_label = {
            int(l): LabelMetrics(
                precision=m["precision"],
                recall=m["recall"],
                f1=m["f1"],
                support=m["support"],
                predicted=m["predicted"],
                zero_support=m["zero_support"],
            )
            for l, m in raw["per_label"].items()
        }
        return cls(
            mode=raw["mode"],
            labels=[int(l) for l in raw["labels"]],
            per_label=per_label,
            macro_f1=raw["macro_f1"],
            scenario=raw["scenario"],
            params=raw["params"],
            set_info=raw["set_info"],
            rounds=raw.get("rounds", []),
        )


def save_report(report: EvalReport, path: str | Path) -> None:
    write_json(path, report.to_dict())


def load_report(path: str | Path) -> EvalReport:
    return EvalReport.from_dict(read_json(path))


def set_summary(cset: ChallengeSet) -> dict:
    counts = cset.label_counts()
    return {
        "form": cset.form,
        "category": cset.category.value,
        "analysis_count": len(cset.analyses),
        "sentence_count": len(cset.sentences),
        "per_label_counts": {str(l): c for l, c in sorted(counts.items())},
        "skew_ratio": cset.skew_ratio,
        "skew_ratio_approximate": cset.skew_ratio_approximate,
    }


# ---------------------------------------------------------------------------
# Runners

def _annotated(e: HomdisError, context: str) -> HomdisError:
    return type(e)(f"{context}: {e}")


def run_cv(
    cset: ChallengeSet,
    scenario: Scenario,
    k: int = 10,
    seed: int = 0,
    strict_folds: bool = True,
) -> EvalReport:
    """Stratified k-fold cross-validation with micro-then-macro scoring.

    Every sentence is predicted exactly once, by the expert trained on the
    other k-1 folds.
    """
    scenario.check_coverage(cset)
    plan = plan_folds(cset, k, seed, strict=strict_folds)
    acc = ConfusionAccumulator(labels=cset.label_ids)
    predicted_once: set[str] = set()
    for fold in range(plan.k):
        train = [s for s in cset.sentences if plan.assignment[s.sentence_id] != fold]
        test = [s for s in cset.sentences if plan.assignment[s.sentence_id] == fold]
        try:
            predictor = scenario.fit(cset, train, seed=child_seed(seed, fold))
        except HomdisError as e:
            raise _annotated(e, f"fold {fold}") from e
        for s in test:
            acc.add(s.label_id, predictor(s))
            predicted_once.add(s.sentence_id)
    assert len(predicted_once) == len(cset.sentences)
    assert acc.total() == len(cset.sentences)
    per_label = micro_f1_per_analysis(acc)
    macro = macro_f1([per_label[l].f1 for l in acc.labels])
    return EvalReport(
        mode="cv",
        labels=list(acc.labels),
        per_label=per_label,
        macro_f1=macro,
        scenario=scenario.describe(),
        params={"k": plan.k, "seed": seed},
        set_info=set_summary(cset),
    )


def run_fewshot(
    cset: ChallengeSet,
    scenario: Scenario,
    n_per_analysis: int,
    rounds: int | None = None,
    seed: int = 0,
) -> EvalReport:
    """Repeated few-shot rounds; the reported score is the mean over rounds.

    Each round draws a fresh n-per-analysis training sample and evaluates
    on all remaining sentences. The default round count comes from the
    scenario (200 for the centroid probe, 10 for trained classifiers).
    """
    scenario.check_coverage(cset)
    if rounds is None:
        rounds = scenario.default_fewshot_rounds
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    labels = cset.label_ids
    round_rows: list[dict] = []
    per_round_metrics: list[dict[int, LabelMetrics]] = []
    for r in range(rounds):
        try:
            train, test = sample_fewshot(
                cset, n_per_analysis, seed=child_seed(seed, r, 0)
            )
            predictor = scenario.fit(cset, train, seed=child_seed(seed, r, 1))
        except HomdisError as e:
            raise _annotated(e, f"round {r}") from e
        acc = ConfusionAccumulator(labels=labels)
        for s in test:
            acc.add(s.label_id, predictor(s))
        per_label = micro_f1_per_analysis(acc)
        per_round_metrics.append(per_label)
        round_rows.append(
            {
                "round": r,
                "macro_f1": macro_f1([per_label[l].f1 for l in labels]),
                "per_label_f1": {str(l): per_label[l].f1 for l in labels},
            }
        )
    mean_per_label = {
        l: LabelMetrics(
            precision=float(np.mean([m[l].precision for m in per_round_metrics])),
            recall=float(np.mean([m[l].recall for m in per_round_metrics])),
            f1=float(np.mean([m[l].f1 for m in per_round_metrics])),
            support=float(np.mean([m[l].support for m in per_round_metrics])),
            predicted=float(np.mean([m[l].predicted for m in per_round_metrics])),
            zero_support=all(m[l].zero_support for m in per_round_metrics),
        )
        for l in labels
    }
    mean_macro = float(np.mean([row["macro_f1"] for row in round_rows]))
    return EvalReport(
        mode="fewshot",
        labels=list(labels),
        per_label=mean_per_label,
        macro_f1=mean_macro,
        scenario=scenario.describe(),
        params={"n_per_analysis": n_per_analysis, "rounds": rounds, "seed": seed},
        set_info=set_summary(cset),
        rounds=round_rows,
    )


# ---------------------------------------------------------------------------
# Breakdown buckets

BUCKET_DIMENSIONS = (
    "category",
    "analysis_count",
    "skew_ratio",
    "piece_count",
    "masked",
)

DEFAULT_SKEW_EDGES = (2.0, 5.0, 20.0)


def _skew_bucket(ratio: float, edges: Sequence[float]) -> str:
    for edge in edges:
        if ratio <= edge:
            return f"<={edge:g}:1"
    return f">{edges[-1]:g}:1"


def _bucket_key(report: EvalReport, dimension: str, edges: Sequence[float]) -> str | None:
    if dimension == "category":
        return report.set_info["category"]
    if dimension == "analysis_count":
        return str(report.set_info["analysis_count"])
    if dimension == "skew_ratio":
        return _skew_bucket(float(report.set_info["skew_ratio"]), edges)
    if dimension == "piece_count":
        pieces = report.scenario.get("piece_count_mode")
        if pieces is None:
            return None
        return "3+" if int(pieces) >= 3 else str(int(pieces))
    if dimension == "masked":
        masked = report.scenario.get("masked")
        if masked is None:
            return None
        return "masked" if masked else "unmasked"
    raise ValueError(
        f"unknown bucket dimension {dimension!r}; expected one of "
        f"{BUCKET_DIMENSIONS}"
    )


def _bucket_inventory(dimension: str, edges: Sequence[float]) -> list[str]:
    if dimension == "category":
        return ["segmentation", "morphosyntactic", "semantic"]
    if dimension == "analysis_count":
        return ["2", "3", "4", "5"]
    if dimension == "skew_ratio":
        return [f"<={e:g}:1" for e in edges] + [f">{edges[-1]:g}:1"]
    if dimension == "piece_count":
        return ["1", "2", "3+"]
    if dimension == "masked":
        return ["unmasked", "masked"]
    raise ValueError(f"unknown bucket dimension {dimension!r}")


def bucket_report(
    reports: Sequence[EvalReport],
    dimension: str,
    skew_edges: Sequence[float] = DEFAULT_SKEW_EDGES,
) -> list[dict]:
    """Mean macro-F1 per bucket; empty buckets appear with count 0.

    Reports that do not carry the dimension (e.g. piece counts for the
    word2vec baseline) are left out of that table.
    """
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for report in reports:
        key = _bucket_key(report, dimension, skew_edges)
        if key is None:
            continue
        sums[key] = sums.get(key, 0.0) + report.macro_f1
        counts[key] = counts.get(key, 0) + 1
    buckets = _bucket_inventory(dimension, skew_edges)
    for key in sorted(counts):
        if key not in buckets:
            buckets.append(key)
    rows = []
    for bucket in buckets:
        n = counts.get(bucket, 0)
        rows.append(
            {
                "dimension": dimension,
                "bucket": bucket,
                "count": n,
                "mean_macro_f1": (sums[bucket] / n) if n else None,
            }
        )
    return rows


def masked_pairs(reports: Sequence[EvalReport]) -> list[dict]:
    """Per-form unmasked vs masked comparison over the given reports."""
    by_form: dict[str, dict[bool, list[float]]] = {}
    for report in reports:
        masked = report.scenario.get("masked")
        if masked is None:
            continue
        form = report.set_info["form"]
        by_form.setdefault(form, {}).setdefault(bool(masked), []).append(
            report.macro_f1
        )
    rows = []
    for form in sorted(by_form):
        flags = by_form[form]
        if True in flags and False in flags:
            rows.append(
                {
                    "form": form,
                    "unmasked_macro_f1": float(np.mean(flags[False])),
                    "masked_macro_f1": float(np.mean(flags[True])),
                    "skew_ratio": None,
                }
            )
    return rows


def aggregate_reports(reports: Sequence[EvalReport]) -> dict:
    """Cross-set totals in the style of a whole-dataset comparison chart."""
    per_set = sorted(
        (
            {
                "form": r.set_info["form"],
                "category": r.set_info["category"],
                "macro_f1": r.macro_f1,
            }
            for r in reports
        ),
        key=lambda row: row["form"],
    )
    return {
        "count": len(per_set),
        "mean_macro_f1": (
            float(np.mean([row["macro_f1"] for row in per_set])) if per_set else None
        ),
        "per_set": per_set,
    }
