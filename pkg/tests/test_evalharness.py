"""Harness metrics against a brute-force oracle; CV/few-shot runners; buckets."""

import numpy as np
import pytest

from conftest import cluster_challenge_set, make_cset, make_embeddings
from homdis.dataset import sample_fewshot
from homdis.embedio import AggregationStrategy
from homdis.errors import CoverageError
from homdis.evalharness import (
    CentroidScenario,
    ConfusionAccumulator,
    ConstantScenario,
    ContextualMlpScenario,
    EvalReport,
    aggregate_reports,
    bucket_report,
    load_report,
    macro_f1,
    masked_pairs,
    micro_f1_per_analysis,
    run_cv,
    run_fewshot,
    save_report,
)


def brute_force_metrics(gold, pred, labels):
    """Independent confusion counter: plain loops, no shared code."""
    per = {}
    for l in labels:
        tp = sum(1 for g, p in zip(gold, pred) if g == l and p == l)
        fp = sum(1 for g, p in zip(gold, pred) if g != l and p == l)
        fn = sum(1 for g, p in zip(gold, pred) if g == l and p != l)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per[l] = (precision, recall, f1)
    macro = sum(v[2] for v in per.values()) / len(labels)
    return per, macro


def _accumulate(gold, pred, labels):
    acc = ConfusionAccumulator(labels=list(labels))
    for g, p in zip(gold, pred):
        acc.add(g, p)
    return acc


# ---------------------------------------------------------------------------
# metrics

def test_metrics_worked_example():
    # gold A A B B / pred A B B B with A=0, B=1
    acc = _accumulate([0, 0, 1, 1], [0, 1, 1, 1], [0, 1])
    metrics = micro_f1_per_analysis(acc)
    assert metrics[0].f1 == pytest.approx(2 / 3, abs=1e-12)
    assert metrics[1].f1 == pytest.approx(0.8, abs=1e-12)
    assert macro_f1([metrics[0].f1, metrics[1].f1]) == pytest.approx(
        11 / 15, abs=1e-12
    )


def test_metrics_perfect_predictions():
    acc = _accumulate([0, 1, 2, 0], [0, 1, 2, 0], [0, 1, 2])
    metrics = micro_f1_per_analysis(acc)
    assert all(m.f1 == 1.0 for m in metrics.values())


def test_metrics_zero_support_label_flagged():
    acc = _accumulate([0, 0], [0, 0], [0, 1])
    metrics = micro_f1_per_analysis(acc)
    assert metrics[1].precision == 0.0
    assert metrics[1].recall == 0.0
    assert metrics[1].f1 == 0.0
    assert metrics[1].zero_support
    assert not metrics[0].zero_support


def test_macro_examples():
    assert macro_f1([1.0, 0.0]) == pytest.approx(0.5)
    assert macro_f1([0.7, 0.7, 0.7]) == pytest.approx(0.7)
    with pytest.raises(ValueError):
        macro_f1([])


def test_metrics_match_brute_force_oracle_randomized():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n_labels = int(rng.integers(2, 6))
        n = int(rng.integers(1, 200))
        labels = list(range(n_labels))
        gold = rng.integers(0, n_labels, size=n).tolist()
        pred = rng.integers(0, n_labels, size=n).tolist()
        acc = _accumulate(gold, pred, labels)
        metrics = micro_f1_per_analysis(acc)
        expected, expected_macro = brute_force_metrics(gold, pred, labels)
        for l in labels:
            assert abs(metrics[l].precision - expected[l][0]) <= 1e-12
            assert abs(metrics[l].recall - expected[l][1]) <= 1e-12
            assert abs(metrics[l].f1 - expected[l][2]) <= 1e-12
        got_macro = macro_f1([metrics[l].f1 for l in labels])
        assert abs(got_macro - expected_macro) <= 1e-12
        assert acc.total() == n


def test_flipping_a_wrong_prediction_never_lowers_macro_f1():
    rng = np.random.default_rng(1)
    checked = 0
    while checked < 200:
        n_labels = int(rng.integers(2, 5))
        n = int(rng.integers(4, 60))
        labels = list(range(n_labels))
        gold = rng.integers(0, n_labels, size=n).tolist()
        pred = rng.integers(0, n_labels, size=n).tolist()
        wrong = [i for i in range(n) if gold[i] != pred[i]]
        if not wrong:
            continue
        _, macro_before = brute_force_metrics(gold, pred, labels)
        i = wrong[int(rng.integers(0, len(wrong)))]
        improved = list(pred)
        improved[i] = gold[i]
        acc = _accumulate(gold, improved, labels)
        metrics = micro_f1_per_analysis(acc)
        macro_after = macro_f1([metrics[l].f1 for l in labels])
        assert macro_after >= macro_before - 1e-12
        checked += 1


# ---------------------------------------------------------------------------
# run_cv

def test_cv_constant_classifier_closed_form():
    cset = make_cset([20, 20], seed=2)
    report = run_cv(cset, ConstantScenario(0), k=10, seed=0)
    # gold 50/50, everything predicted 0: F1_0 = 2/3, F1_1 = 0 -> macro 1/3
    assert report.per_label[0].f1 == pytest.approx(2 / 3, abs=1e-12)
    assert report.per_label[1].f1 == pytest.approx(0.0, abs=1e-12)
    assert report.macro_f1 == pytest.approx(1 / 3, abs=1e-12)


def test_cv_supports_cover_every_sentence_once():
    cset = make_cset([15, 10, 5], seed=3)
    report = run_cv(cset, ConstantScenario(1), k=5, seed=1)
    assert report.per_label[0].support == 15
    assert report.per_label[1].support == 10
    assert report.per_label[2].support == 5
    assert sum(report.per_label[l].predicted for l in report.labels) == 30


def test_cv_separable_embeddings_high_macro_f1():
    cset, eset = cluster_challenge_set(dim=32, n_per_class=30, seed=4)
    report = run_cv(cset, ContextualMlpScenario(eset), k=10, seed=0)
    assert report.macro_f1 >= 0.99
    assert report.mode == "cv"
    assert report.params["k"] == 10
    assert report.scenario["provider"] == "synthetic@last"


def test_cv_coverage_error_reported_before_folds():
    cset = make_cset([6, 6], seed=5)
    eset = make_embeddings(cset, dim=8, seed=5)
    del eset.records["s3"]
    with pytest.raises(CoverageError):
        run_cv(cset, ContextualMlpScenario(eset), k=3, seed=0)


def test_cv_fold_errors_annotated_with_fold_index():
    class ExplodingScenario(ConstantScenario):
        def fit(self, cset, train, seed):
            raise CoverageError("boom")

    cset = make_cset([6, 6], seed=6)
    with pytest.raises(CoverageError) as err:
        run_cv(cset, ExplodingScenario(0), k=3, seed=0)
    assert "fold 0" in str(err.value)


# ---------------------------------------------------------------------------
# run_fewshot

def test_fewshot_single_round_equals_manual_composition():
    from homdis.util import child_seed

    cset, eset = cluster_challenge_set(dim=16, n_per_class=12, seed=7)
    scenario = CentroidScenario(eset)
    report = run_fewshot(cset, scenario, 3, rounds=1, seed=9)

    train, test = sample_fewshot(cset, 3, seed=child_seed(9, 0, 0))
    predictor = scenario.fit(cset, train, seed=child_seed(9, 0, 1))
    acc = ConfusionAccumulator(labels=cset.label_ids)
    for s in test:
        acc.add(s.label_id, predictor(s))
    metrics = micro_f1_per_analysis(acc)
    manual_macro = macro_f1([metrics[l].f1 for l in cset.label_ids])
    assert report.macro_f1 == pytest.approx(manual_macro, abs=1e-12)
    assert report.rounds[0]["macro_f1"] == pytest.approx(manual_macro, abs=1e-12)


def test_fewshot_default_round_counts():
    cset, eset = cluster_challenge_set(dim=8, n_per_class=6, seed=8)
    centroid = run_fewshot(cset, CentroidScenario(eset), 2, seed=0)
    assert centroid.params["rounds"] == 200
    assert len(centroid.rounds) == 200
    assert ContextualMlpScenario(eset).default_fewshot_rounds == 10


def test_fewshot_mean_over_rounds():
    cset, eset = cluster_challenge_set(dim=8, n_per_class=6, seed=9)
    report = run_fewshot(cset, CentroidScenario(eset), 2, rounds=5, seed=1)
    macros = [row["macro_f1"] for row in report.rounds]
    assert report.macro_f1 == pytest.approx(float(np.mean(macros)), abs=1e-12)
    assert len(macros) == 5
    # support per label is constant: count - n
    assert report.per_label[0].support == 4.0


def test_fewshot_sampling_error_annotated_with_round():
    from homdis.errors import SamplingError

    cset = make_cset([4, 4], seed=10)
    eset = make_embeddings(cset, dim=6, seed=10)
    with pytest.raises(SamplingError) as err:
        run_fewshot(cset, CentroidScenario(eset), 4, rounds=2, seed=0)
    assert "round 0" in str(err.value)


# ---------------------------------------------------------------------------
# reports and buckets

def _report_with(macro, category="semantic", analysis_count=2, skew=1.5,
                 masked=None, pieces=None, form="f", mode="cv"):
    scenario = {"kind": "contextual"}
    if masked is not None:
        scenario["masked"] = masked
    if pieces is not None:
        scenario["piece_count_mode"] = pieces
    return EvalReport(
        mode=mode,
        labels=[0, 1],
        per_label={},
        macro_f1=macro,
        scenario=scenario,
        params={"k": 10, "seed": 0},
        set_info={
            "form": form,
            "category": category,
            "analysis_count": analysis_count,
            "sentence_count": 10,
            "skew_ratio": skew,
            "skew_ratio_approximate": False,
        },
    )


def test_bucket_category_passthrough():
    reports = [
        _report_with(0.9, category="segmentation"),
        _report_with(0.9, category="morphosyntactic"),
        _report_with(0.8, category="semantic"),
    ]
    rows = bucket_report(reports, "category")
    by_bucket = {r["bucket"]: r for r in rows}
    assert by_bucket["segmentation"]["mean_macro_f1"] == pytest.approx(0.9)
    assert by_bucket["morphosyntactic"]["mean_macro_f1"] == pytest.approx(0.9)
    assert by_bucket["semantic"]["mean_macro_f1"] == pytest.approx(0.8)
    assert all(r["count"] == 1 for r in rows)


def test_bucket_analysis_count_four_buckets():
    reports = [_report_with(0.9, analysis_count=c) for c in (2, 3, 4, 5)]
    rows = bucket_report(reports, "analysis_count")
    assert [r["bucket"] for r in rows] == ["2", "3", "4", "5"]
    assert all(r["count"] == 1 for r in rows)


def test_bucket_empty_buckets_have_no_mean():
    rows = bucket_report([_report_with(0.7, category="semantic")], "category")
    by_bucket = {r["bucket"]: r for r in rows}
    assert by_bucket["segmentation"]["count"] == 0
    assert by_bucket["segmentation"]["mean_macro_f1"] is None


def test_bucket_skew_edges():
    reports = [
        _report_with(0.9, skew=1.0),
        _report_with(0.8, skew=4.0),
        _report_with(0.7, skew=19.0),
        _report_with(0.6, skew=100.0),
    ]
    rows = bucket_report(reports, "skew_ratio")
    assert [r["bucket"] for r in rows] == ["<=2:1", "<=5:1", "<=20:1", ">20:1"]
    assert [r["count"] for r in rows] == [1, 1, 1, 1]


def test_bucket_piece_count_and_missing_dimension():
    reports = [
        _report_with(0.9, pieces=1),
        _report_with(0.8, pieces=2),
        _report_with(0.7, pieces=5),
        _report_with(0.999),  # lacks piece counts (e.g. baseline)
    ]
    rows = bucket_report(reports, "piece_count")
    by_bucket = {r["bucket"]: r for r in rows}
    assert by_bucket["1"]["count"] == 1
    assert by_bucket["2"]["count"] == 1
    assert by_bucket["3+"]["count"] == 1
    assert sum(r["count"] for r in rows) == 3


def test_bucket_masked_and_pairs():
    reports = [
        _report_with(0.9, masked=False, form="x"),
        _report_with(0.85, masked=True, form="x"),
        _report_with(0.8, masked=False, form="y"),
    ]
    rows = bucket_report(reports, "masked")
    by_bucket = {r["bucket"]: r for r in rows}
    assert by_bucket["unmasked"]["count"] == 2
    assert by_bucket["masked"]["count"] == 1
    pairs = masked_pairs(reports)
    assert len(pairs) == 1
    assert pairs[0]["form"] == "x"
    assert pairs[0]["unmasked_macro_f1"] == pytest.approx(0.9)
    assert pairs[0]["masked_macro_f1"] == pytest.approx(0.85)


def test_bucket_unknown_dimension():
    with pytest.raises(ValueError):
        bucket_report([_report_with(0.9)], "nonsense")


def test_report_json_roundtrip(tmp_path):
    cset, eset = cluster_challenge_set(dim=8, n_per_class=5, seed=11)
    report = run_fewshot(cset, CentroidScenario(eset), 2, rounds=3, seed=2)
    path = tmp_path / "report.json"
    save_report(report, path)
    loaded = load_report(path)
    assert loaded.macro_f1 == report.macro_f1
    assert loaded.per_label == report.per_label
    assert loaded.labels == report.labels
    assert loaded.scenario == report.scenario
    assert loaded.rounds == report.rounds


def test_aggregate_reports_sorted_by_form():
    reports = [_report_with(0.8, form="zz"), _report_with(0.6, form="aa")]
    agg = aggregate_reports(reports)
    assert [row["form"] for row in agg["per_set"]] == ["aa", "zz"]
    assert agg["mean_macro_f1"] == pytest.approx(0.7)
    assert agg["count"] == 2
