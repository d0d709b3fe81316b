"""Candidate mining: windows, reservoir sampling, proxies, planted signal."""

import numpy as np
import pytest

from conftest import build_planted_corpus, make_table
from homdis.errors import ProxyExhaustedError, TrainingError
from homdis.mining import (
    DEFAULT_INITIAL_SAMPLE,
    MinedSentence,
    MiningCandidate,
    ProxyKind,
    ProxySpec,
    build_proxy_training_set,
    context_window,
    mine_candidates,
    read_candidates,
    sample_initial,
    score_occurrence,
    train_proxy_classifier,
    union_candidates,
    w2v_distant_words,
    write_candidates,
)


def _write_corpus(path, lines):
    path.write_text("\n".join(" ".join(l) for l in lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# windows

def test_context_window_excludes_target():
    tokens = [f"t{i}" for i in range(10)]
    window = context_window(tokens, 5)
    assert window == ["t1", "t2", "t3", "t4", "t6", "t7", "t8", "t9"]
    assert "t5" not in window


def test_context_window_pads_edges_with_none():
    window = context_window(["a", "b", "c"], 0)
    assert window == [None, None, None, None, "b", "c", None, None]
    window = context_window(["a", "b", "c"], 2)
    assert window == [None, None, "a", "b", None, None, None, None]


# ---------------------------------------------------------------------------
# initial sampling

def test_sample_initial_default_is_4000():
    assert DEFAULT_INITIAL_SAMPLE == 4000
    import inspect

    from homdis.mining import sample_initial as fn

    assert inspect.signature(fn).parameters["n"].default == 4000


def test_sample_initial_exhaustion_flags_shortfall(tmp_path):
    corpus = tmp_path / "c.txt"
    lines = [["x", "TGT", "y"]] * 10 + [["no", "match"]] * 50
    _write_corpus(corpus, lines)
    result = sample_initial(corpus, "TGT", n=4000, seed=0)
    assert len(result.sentences) == 10
    assert result.shortfall
    assert result.requested == 4000


def test_sample_initial_deterministic(tmp_path):
    corpus = tmp_path / "c.txt"
    lines = [[f"w{i}", "TGT", f"v{i}"] for i in range(50)]
    _write_corpus(corpus, lines)
    a = sample_initial(corpus, "TGT", n=10, seed=5)
    b = sample_initial(corpus, "TGT", n=10, seed=5)
    assert a == b
    c = sample_initial(corpus, "TGT", n=10, seed=6)
    assert a != c


def test_sample_initial_target_index_is_first_occurrence(tmp_path):
    corpus = tmp_path / "c.txt"
    _write_corpus(corpus, [["a", "TGT", "b", "TGT"]])
    result = sample_initial(corpus, "TGT", n=5, seed=0)
    assert result.sentences[0].target_index == 1


def test_reservoir_sampling_uniform_within_3_sigma(tmp_path):
    corpus = tmp_path / "c.txt"
    n_matches = 12
    lines = [[f"m{i}", "TGT"] for i in range(n_matches)]
    _write_corpus(corpus, lines)
    k = 5
    trials = 3000
    counts = {f"L{i + 1}": 0 for i in range(n_matches)}
    for seed in range(trials):
        result = sample_initial(corpus, "TGT", n=k, seed=seed)
        for s in result.sentences:
            counts[s.sentence_id] += 1
    p = k / n_matches
    sigma = np.sqrt(trials * p * (1 - p))
    expected = trials * p
    for sid, count in counts.items():
        assert abs(count - expected) <= 3 * sigma, (sid, count, expected)


# ---------------------------------------------------------------------------
# proxies

def test_w2v_distant_matches_brute_force_scan():
    table = make_table([f"t{i}" for i in range(40)] + ["TGT"], dim=6, seed=1)
    got = w2v_distant_words(table, "TGT", 5)
    target = table.vectors["TGT"].astype(np.float64)
    sims = {}
    for tok, vec in table.vectors.items():
        if tok == "TGT":
            continue
        v = vec.astype(np.float64)
        sims[tok] = (v @ target) / (np.linalg.norm(v) * np.linalg.norm(target))
    expected = sorted(sims, key=lambda t: sims[t])[:5]
    assert set(got) == set(expected)


def test_w2v_distant_requires_form_vector():
    table = make_table(["a", "b"], dim=4)
    with pytest.raises(ProxyExhaustedError):
        w2v_distant_words(table, "missing", 3)


def test_build_proxy_training_set_balances_and_pads(tmp_path):
    corpus = tmp_path / "c.txt"
    lines = [["QQQ", "a", "b"]] * 3 + [["c", "d"]] * 5
    _write_corpus(corpus, lines)
    table = make_table(["a", "b", "c", "d", "QQQ", "TGT"], dim=4, seed=2)
    primary = [
        MinedSentence(f"p{i}", ("x", "TGT", "y"), 1) for i in range(10)
    ]
    spec = ProxySpec(kind=ProxyKind.MORPH_CONTRAST, word_list=("QQQ",))
    training = build_proxy_training_set(primary, spec, corpus, table, seed=0)
    labels = [y for _, y in training]
    assert labels.count(0) == 3  # downsampled to the opposing count
    assert labels.count(1) == 3
    # proxy occurrences at sentence start: left context fully padded
    opposing_windows = [w for w, y in training if y == 1]
    assert opposing_windows[0][:4] == [None, None, None, None]


def test_build_proxy_training_set_no_hits(tmp_path):
    corpus = tmp_path / "c.txt"
    _write_corpus(corpus, [["a", "b"]])
    table = make_table(["a", "b", "TGT", "ZZZ"], dim=4)
    primary = [MinedSentence("p0", ("x", "TGT", "y"), 1)]
    spec = ProxySpec(kind=ProxyKind.MORPH_CONTRAST, word_list=("ZZZ",))
    with pytest.raises(ProxyExhaustedError):
        build_proxy_training_set(primary, spec, corpus, table, seed=0)


def test_random_proxy_deterministic(tmp_path):
    corpus = tmp_path / "c.txt"
    lines = [[f"t{i}", "pad"] for i in range(30)]
    _write_corpus(corpus, lines)
    table = make_table([f"t{i}" for i in range(30)] + ["TGT"], dim=4, seed=3)
    primary = [MinedSentence("p0", ("x", "TGT", "y"), 1)] * 4
    spec = ProxySpec(kind=ProxyKind.RANDOM, sample_size=5)
    a = build_proxy_training_set(primary, spec, corpus, table, seed=11)
    b = build_proxy_training_set(primary, spec, corpus, table, seed=11)
    assert a == b


def test_train_proxy_classifier_rejects_single_class():
    table = make_table(["a"], dim=4)
    with pytest.raises(TrainingError):
        train_proxy_classifier([(["a"] * 8, 0)], table, seed=0)


# ---------------------------------------------------------------------------
# end-to-end planted signal (small version; acceptance runs the 100k one)

@pytest.fixture(scope="module")
def planted(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("mining")
    corpus = tmp / "corpus.txt"
    table, planted_ids, primary = build_planted_corpus(
        corpus, n_sentences=4000, n_planted=60, n_primary=150, n_proxy=120,
        seed=42, dim=16,
    )
    spec = ProxySpec(kind=ProxyKind.MORPH_CONTRAST, word_list=("QQQ",))
    training = build_proxy_training_set(primary, spec, corpus, table, seed=1)
    clf = train_proxy_classifier(training, table, seed=2)
    return corpus, table, planted_ids, primary, clf


def test_planted_signal_recall(planted):
    corpus, table, planted_ids, _, clf = planted
    candidates = mine_candidates(clf, table, corpus, "TGT", threshold=0.5)
    found = {c.sentence_id for c in candidates}
    recall = len(found & set(planted_ids)) / len(planted_ids)
    assert recall >= 0.9


def test_candidates_sorted_and_thresholded(planted):
    corpus, table, _, _, clf = planted
    candidates = mine_candidates(clf, table, corpus, "TGT", threshold=0.5)
    scores = [c.score for c in candidates]
    assert scores == sorted(scores, reverse=True)
    assert all(0.5 <= s <= 1.0 for s in scores)


def test_threshold_one_yields_empty(planted):
    corpus, table, _, _, clf = planted
    candidates = mine_candidates(clf, table, corpus, "TGT", threshold=1.0)
    assert candidates == []


def test_exclusion_invariant_target_surface_irrelevant(planted):
    _, table, _, primary, clf = planted
    s = primary[0]
    base = score_occurrence(clf, table, s.tokens, s.target_index)
    mutated = list(s.tokens)
    mutated[s.target_index] = "COMPLETELY_DIFFERENT"
    assert score_occurrence(clf, table, mutated, s.target_index) == base


def test_candidate_export_roundtrip(planted, tmp_path):
    corpus, table, _, _, clf = planted
    candidates = mine_candidates(
        clf, table, corpus, "TGT", threshold=0.5,
        provenance={"proxy": {"kind": "morph-contrast"}},
    )[:10]
    path = tmp_path / "cands.jsonl"
    write_candidates(candidates, path)
    loaded = read_candidates(path)
    assert loaded == candidates


def test_union_keeps_best_score():
    a = [
        {"sid": "L1", "score": 0.9},
        {"sid": "L2", "score": 0.6},
    ]
    b = [
        {"sid": "L1", "score": 0.7},
        {"sid": "L3", "score": 0.8},
    ]

    def mk(d):
        return [
            MiningCandidate(
                sentence_id=x["sid"], tokens=("t",), target_index=0,
                score=x["score"], provenance={},
            )
            for x in d
        ]

    merged = union_candidates([mk(a), mk(b)])
    by_id = {c.sentence_id: c.score for c in merged}
    assert by_id == {"L1": 0.9, "L2": 0.6, "L3": 0.8}
    assert [c.sentence_id for c in merged] == ["L1", "L3", "L2"]
