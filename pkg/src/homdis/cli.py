"""Command-line surface for the toolkit.

Every run resolves its configuration (flags > HOMDIS_OUTDIR env for the
output directory > --config file > defaults), writes the resolved config
next to its outputs as run_config.txt, and never mutates its inputs.
Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .config import OUTDIR_ENV, ExperimentConfig
from .dataset import build_manifest, load_challenge_set, manifest_entry
from .embedio import AggregationStrategy, describe, read_embedding_set
from .errors import ConfigurationError, HomdisError
from .evalharness import (
    DEFAULT_SKEW_EDGES,
    CentroidScenario,
    ContextualMlpScenario,
    EvalReport,
    W2vBaselineScenario,
    aggregate_reports,
    bucket_report,
    load_report,
    masked_pairs,
    run_cv,
    run_fewshot,
    save_report,
)
from .expert import (
    load_word_vectors,
    save_baseline_expert,
    save_contextual_expert,
    train_contextual_expert,
    train_w2v_baseline,
)
from .mining import (
    MinedSentence,
    ProxyKind,
    ProxySpec,
    build_proxy_training_set,
    mine_candidates,
    read_candidates,
    sample_initial,
    train_proxy_classifier,
    union_candidates,
    write_candidates,
)
from .probe import fit_centroids, save_centroid_model
from .tinynn import check_bilstm_mlp_gradients, check_mlp_gradients, create_bilstm, create_mlp
from .util import child_seed, rng_for, write_json

log = logging.getLogger("homdis")

DEFAULTS = ExperimentConfig(
    aggregation="first",
    metric="dot",
    k=10,
    n=[100, 50, 25, 10, 5],
    seed=0,
    strict=True,
    jobs=1,
    threshold=0.5,
    distance_count=5,
    sample_size=100,
    pooled=False,
    out="homdis-out",
    dimension="category",
    skew_edges=list(DEFAULT_SKEW_EDGES),
    instances=100,
    tolerance=1e-4,
)


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _resolve(
    args: argparse.Namespace,
    command: str,
    command_defaults: ExperimentConfig | None = None,
) -> ExperimentConfig:
    cfg = DEFAULTS
    if command_defaults is not None:
        cfg = command_defaults.merged_over(cfg)
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_file(args.config).merged_over(cfg)
    env_out = os.environ.get(OUTDIR_ENV)
    if env_out:
        cfg = ExperimentConfig(out=env_out).merged_over(cfg)
    overrides = {
        name: value
        for name, value in vars(args).items()
        if name in ExperimentConfig.__dataclass_fields__ and value is not None
    }
    overrides["command"] = command
    return ExperimentConfig(**overrides).merged_over(cfg)


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run_config(cfg: ExperimentConfig, outdir: Path) -> None:
    cfg.write(outdir / "run_config.txt")


def _write_csv(path: Path, rows: Sequence[dict], columns: Sequence[str]) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row.get(c) for c in columns})


def _per_analysis_rows(report: EvalReport) -> list[dict]:
    surfaces = report.set_info.get("surface_keys", {})
    rows = []
    for label in report.labels:
        m = report.per_label[label]
        rows.append(
            {
                "form": report.set_info["form"],
                "label_id": label,
                "surface_key": surfaces.get(str(label), ""),
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
                "predicted": m.predicted,
                "zero_support": m.zero_support,
            }
        )
    return rows


PER_ANALYSIS_COLUMNS = (
    "form", "label_id", "surface_key", "precision", "recall", "f1",
    "support", "predicted", "zero_support",
)


def _save_report_files(report: EvalReport, outdir: Path, basename: str) -> None:
    save_report(report, outdir / f"{basename}.json")
    _write_csv(
        outdir / f"{basename}_per_analysis.csv",
        _per_analysis_rows(report),
        PER_ANALYSIS_COLUMNS,
    )
    if report.rounds:
        _write_csv(
            outdir / f"{basename}_rounds.csv",
            [
                {"round": row["round"], "macro_f1": row["macro_f1"]}
                for row in report.rounds
            ],
            ("round", "macro_f1"),
        )


def _build_scenario(cfg: ExperimentConfig, mode: str):
    aggregation = AggregationStrategy(cfg.aggregation)
    if mode in ("contextual", "mlp"):
        if not cfg.emb:
            raise ConfigurationError(f"mode {mode!r} requires --emb")
        return ContextualMlpScenario(
            read_embedding_set(cfg.emb), aggregation, strict=cfg.strict
        )
    if mode == "centroid":
        if not cfg.emb:
            raise ConfigurationError("mode 'centroid' requires --emb")
        return CentroidScenario(
            read_embedding_set(cfg.emb), aggregation, metric=cfg.metric
        )
    if mode == "baseline":
        if not cfg.vectors:
            raise ConfigurationError("mode 'baseline' requires --vectors")
        return W2vBaselineScenario(load_word_vectors(cfg.vectors), strict=cfg.strict)
    raise ConfigurationError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Manifest sweeps

def _manifest_tasks(cfg: ExperimentConfig) -> list[tuple[str, str]]:
    """(set path, set stem) pairs from a dataset manifest."""
    from .util import read_json

    manifest = read_json(cfg.manifest)
    tasks = []
    for entry in manifest.get("sets", []):
        path = entry["path"]
        tasks.append((path, Path(path).stem))
    if not tasks:
        raise ConfigurationError(f"manifest {cfg.manifest} lists no sets")
    return sorted(tasks, key=lambda t: t[1])


def _set_emb_path(cfg: ExperimentConfig, set_path: str) -> str:
    if cfg.emb:
        return cfg.emb
    if not cfg.emb_dir:
        raise ConfigurationError(
            "manifest sweeps in contextual/centroid modes need --emb-dir "
            "(embedding files named <set-stem>.hxe)"
        )
    return str(Path(cfg.emb_dir) / (Path(set_path).stem + ".hxe"))


def _sweep_one(task: tuple[str, dict]) -> tuple[str, dict]:
    """Worker for manifest sweeps; returns (stem, report dict)."""
    stem, payload = task
    cfg = ExperimentConfig(**payload["cfg"])
    cset = load_challenge_set(payload["set_path"])
    scenario = _build_scenario(cfg, payload["mode"])
    if payload["runner"] == "cv":
        report = run_cv(cset, scenario, k=cfg.k, seed=cfg.seed, strict_folds=cfg.strict)
    else:
        report = run_fewshot(
            cset, scenario, payload["n"], rounds=cfg.rounds, seed=cfg.seed
        )
    return stem, report.to_dict()


def _run_sweep(
    cfg: ExperimentConfig, mode: str, runner: str, outdir: Path, n: int | None = None
) -> list[EvalReport]:
    tasks = []
    for set_path, stem in _manifest_tasks(cfg):
        payload_cfg = {
            k: v for k, v in vars(cfg).items() if v is not None
        }
        payload_cfg["emb"] = (
            _set_emb_path(cfg, set_path) if mode in ("contextual", "mlp", "centroid")
            else None
        )
        tasks.append(
            (
                stem,
                {
                    "cfg": payload_cfg,
                    "set_path": set_path,
                    "mode": mode,
                    "runner": runner,
                    "n": n,
                },
            )
        )
    if cfg.jobs and cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    reports = []
    suffix = f"_n{n}" if n is not None else ""
    for stem, raw in results:
        report = EvalReport.from_dict(raw)
        _save_report_files(report, outdir, f"report_{stem}{suffix}")
        reports.append(report)
    return reports


def _write_aggregate(reports: list[EvalReport], outdir: Path, basename: str) -> None:
    agg = aggregate_reports(reports)
    write_json(outdir / f"{basename}.json", agg)
    _write_csv(
        outdir / f"{basename}_per_set.csv",
        agg["per_set"],
        ("form", "category", "macro_f1"),
    )


# ---------------------------------------------------------------------------
# Commands

def cmd_validate(args: argparse.Namespace) -> int:
    cfg = _resolve(args, "validate")
    if not cfg.sets:
        raise ConfigurationError("validate requires --sets")
    entries = []
    for path in cfg.sets:
        cset = load_challenge_set(path)
        entry = manifest_entry(path, cset)
        entries.append(entry)
        log.info(
            "%s: %d analyses, %d sentences, category=%s, dropped=%d",
            cset.form, entry["analysis_count"], entry["sentence_count"],
            entry["category"], entry["dropped_count"],
        )
    outdir = _outdir(cfg)
    write_json(outdir / "manifest.json", build_manifest(entries))
    _write_run_config(cfg, outdir)
    print(f"validated {len(entries)} set(s) -> {outdir / 'manifest.json'}")
    return 0


def cmd_embed_describe(args: argparse.Namespace) -> int:
    cfg = _resolve(args, "embed-describe")
    if not cfg.emb:
        raise ConfigurationError("embed-describe requires --emb")
    info = describe(read_embedding_set(cfg.emb))
    for key in ("provider", "dim", "masked", "count", "piece_count_mode"):
        print(f"{key}: {info[key]}")
    if args.out is not None:
        outdir = _outdir(cfg)
        write_json(outdir / "describe.json", info)
        _write_run_config(cfg, outdir)
    return 0


def cmd_train_expert(args: argparse.Namespace) -> int:
    cfg = _resolve(args, "train-expert")
    if not cfg.sets or len(cfg.sets) != 1:
        raise ConfigurationError("train-expert requires exactly one --set")
    mode = cfg.mode or "contextual"
    cset = load_challenge_set(cfg.sets[0])
    stem = Path(cfg.sets[0]).stem
    outdir = _outdir(cfg)
    train_ids = [s.sentence_id for s in cset.sentences]
    if mode == "contextual":
        if not cfg.emb:
            raise ConfigurationError("contextual training requires --emb")
        eset = read_embedding_set(cfg.emb)
        expert = train_contextual_expert(
            cset, eset, train_ids, AggregationStrategy(cfg.aggregation),
            seed=cfg.seed, strict=cfg.strict,
        )
        ckpt = outdir / f"{stem}.contextual.expert.hnc"
        save_contextual_expert(expert, ckpt)
    elif mode == "baseline":
        if not cfg.vectors:
            raise ConfigurationError("baseline training requires --vectors")
        table = load_word_vectors(cfg.vectors)
        expert = train_w2v_baseline(
            cset, table, train_ids, seed=cfg.seed, strict=cfg.strict
        )
        ckpt = outdir / f"{stem}.baseline.expert.hnc"
        save_baseline_expert(expert, ckpt)
    else:
        raise ConfigurationError(f"unknown training mode {mode!r}")
    _write_run_config(cfg, outdir)
    print(f"trained {mode} expert for {cset.form!r} -> {ckpt}")
    return 0


def cmd_eval_cv(args: argparse.Namespace) -> int:
    cfg = _resolve(args, "eval-cv")
    mode = cfg.mode or "contextual"
    outdir = _outdir(cfg)
    if cfg.manifest:
        reports = _run_sweep(cfg, mode, "cv", outdir)
        _write_aggregate(reports, outdir, "aggregate")
        _write_run_config(cfg, outdir)
        print(
            f"{len(reports)} set(s), mean macro-F1 = "
            f"{aggregate_reports(reports)['mean_macro_f1']:.4f}"
        )
        return 0
    if not cfg.sets or len(cfg.sets) != 1:
        raise ConfigurationError("eval-cv requires one --set (or --manifest)")
    cset = load_challenge_set(cfg.sets[0])
    scenario = _build_scenario(cfg, mode)
    report = run_cv(cset, scenario, k=cfg.k, seed=cfg.seed, strict_folds=cfg.strict)
    _save_report_files(report, outdir, "report")
    _write_run_config(cfg, outdir)
    print(f"{cset.form!r} {mode} CV macro-F1 = {report.macro_f1:.4f}")
    return 0


def cmd_eval_fewshot(args: argparse.Namespace) -> int:
    cfg = _resolve(args, "eval-fewshot")
    mode = cfg.mode or "mlp"
    outdir = _outdir(cfg)
    summary_rows = []
    if cfg.manifest:
        for n in cfg.n:
            reports = _run_sweep(cfg, mode, "fewshot", outdir, n=n)
            _write_aggregate(reports, outdir, f"aggregate_n{n}")
            mean = aggregate_reports(reports)["mean_macro_f1"]
            summary_rows.append({"n_per_analysis": n, "mean_macro_f1": mean})
            print(f"n={n}: {len(reports)} set(s), mean macro-F1 = {mean:.4f}")
    else:
        if not cfg.sets or len(cfg.sets) != 1:
            raise ConfigurationError(
                "eval-fewshot requires one --set (or --manifest)"
            )
        cset = load_challenge_set(cfg.sets[0])
        scenario = _build_scenario(cfg, mode)
        for n in cfg.n:
            report = run_fewshot(cset, scenario, n, rounds=cfg.rounds, seed=cfg.seed)
            _save_report_files(report, outdir, f"report_n{n}")
            summary_rows.append(
                {"n_per_analysis": n, "mean_macro_f1": report.macro_f1}
            )
            print(
                f"{cset.form!r} {mode} few-shot n={n} "
                f"({report.params['rounds']} rounds) "
                f"mean macro-F1 = {report.macro_f1:.4f}"
            )
    _write_csv(
        outdir / "fewshot_summary.csv",
        summary_rows,
        ("n_per_analysis", "mean_macro_f1"),
    )
    _write_run_config(cfg, outdir)
    return 0


def cmd_probe_centroid(args: argparse.Namespace) -> int:
    cfg = _resolve(
        args,
        "probe-centroid",
        command_defaults=ExperimentConfig(mode="centroid", n=[100], rounds=200),
    )
    return _run_probe_centroid(cfg)


def _run_probe_centroid(cfg: ExperimentConfig) -> int:
    """probe-centroid body: few-shot centroid protocol plus a full-data fit."""
    if not cfg.sets or len(cfg.sets) != 1:
        raise ConfigurationError("probe-centroid requires one --set")
    outdir = _outdir(cfg)
    cset = load_challenge_set(cfg.sets[0])
    scenario = _build_scenario(cfg, "centroid")
    summary_rows = []
    for n in cfg.n:
        report = run_fewshot(cset, scenario, n, rounds=cfg.rounds, seed=cfg.seed)
        _save_report_files(report, outdir, f"report_n{n}")
        summary_rows.append({"n_per_analysis": n, "mean_macro_f1": report.macro_f1})
        print(
            f"{cset.form!r} centroid probe n={n} ({report.params['rounds']} rounds) "
            f"mean macro-F1 = {report.macro_f1:.4f}"
        )
    _write_csv(
        outdir / "fewshot_summary.csv",
        summary_rows,
        ("n_per_analysis", "mean_macro_f1"),
    )
    records = scenario.embeddings.records
    model = fit_centroids(
        [(records[s.sentence_id], s.label_id) for s in cset.sentences],
        scenario.aggregation,
    )
    save_centroid_model(model, outdir / "centroids.hnc")
    _write_run_config(cfg, outdir)
    return 0


def cmd_bucket_report(args: argparse.Namespace) -> int:
    cfg = _resolve(args, "bucket-report")
    if not cfg.reports:
        raise ConfigurationError("bucket-report requires --reports")
    paths: list[Path] = []
    for raw in cfg.reports:
        p = Path(raw)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.json")))
        else:
            paths.append(p)
    reports = []
    for p in paths:
        try:
            from .util import read_json

            raw = read_json(p)
        except Exception:
            continue
        if isinstance(raw, dict) and raw.get("kind") == "eval_report":
            reports.append(EvalReport.from_dict(raw))
    if not reports:
        raise ConfigurationError("no eval reports found under --reports")
    outdir = _outdir(cfg)
    rows = bucket_report(reports, cfg.dimension, cfg.skew_edges)
    write_json(
        outdir / "buckets.json",
        {"dimension": cfg.dimension, "skew_edges": cfg.skew_edges, "rows": rows},
    )
    _write_csv(
        outdir / "buckets.csv", rows,
        ("dimension", "bucket", "count", "mean_macro_f1"),
    )
    if cfg.dimension == "masked":
        pairs = masked_pairs(reports)
        _write_csv(
            outdir / "masked_pairs.csv", pairs,
            ("form", "unmasked_macro_f1", "masked_macro_f1", "skew_ratio"),
        )
    _write_run_config(cfg, outdir)
    for row in rows:
        mean = row["mean_macro_f1"]
        shown = f"{mean:.4f}" if mean is not None else "-"
        print(f"{row['bucket']:>16}  n={row['count']:<4d} mean macro-F1 {shown}")
    return 0


def _load_primary(path: str) -> list[MinedSentence]:
    import json as _json

    out = []
    with Path(path).open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            raw = _json.loads(line)
            tokens = (
                tuple(raw["tokens"])
                if "tokens" in raw
                else tuple(raw["sentence"].split())
            )
            out.append(
                MinedSentence(
                    sentence_id=str(raw.get("sentence_id", f"P{lineno}")),
                    tokens=tokens,
                    target_index=int(raw["target_index"]),
                )
            )
    return out


def _write_mined_sentences(sentences: list[MinedSentence], path: Path) -> None:
    import json as _json

    with path.open("w", encoding="utf-8") as f:
        for s in sentences:
            f.write(
                _json.dumps(
                    {
                        "sentence_id": s.sentence_id,
                        "sentence": " ".join(s.tokens),
                        "target_index": s.target_index,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def cmd_mine(args: argparse.Namespace) -> int:
    cfg = _resolve(args, "mine")
    if not cfg.corpus or not cfg.form:
        raise ConfigurationError("mine requires --corpus and --form")
    outdir = _outdir(cfg)

    if cfg.initial_sample:
        sample = sample_initial(cfg.corpus, cfg.form, n=cfg.initial_sample, seed=cfg.seed)
        _write_mined_sentences(sample.sentences, outdir / "initial_sample.jsonl")
        _write_run_config(cfg, outdir)
        note = " (shortfall: corpus has fewer matches)" if sample.shortfall else ""
        print(
            f"sampled {len(sample.sentences)}/{sample.requested} sentences "
            f"containing {cfg.form!r}{note}"
        )
        return 0

    if not cfg.vectors or not cfg.primary or not cfg.proxy:
        raise ConfigurationError(
            "mine requires --vectors, --primary and --proxy "
            "(or --initial-sample for step 1)"
        )
    table = load_word_vectors(cfg.vectors)
    primary = _load_primary(cfg.primary)

    specs = []
    for name in cfg.proxy:
        kind = ProxyKind(name)
        if kind is ProxyKind.MORPH_CONTRAST:
            if not cfg.proxy_words:
                raise ConfigurationError(
                    "morph-contrast proxy requires --proxy-words"
                )
            words = tuple(
                w.strip()
                for w in Path(cfg.proxy_words).read_text(encoding="utf-8").split()
                if w.strip()
            )
            specs.append(ProxySpec(kind=kind, word_list=words))
        elif kind is ProxyKind.W2V_DISTANT:
            specs.append(ProxySpec(kind=kind, distance_count=cfg.distance_count))
        else:
            specs.append(ProxySpec(kind=kind, sample_size=cfg.sample_size))

    groups = []
    if cfg.pooled:
        pooled: list = []
        for i, spec in enumerate(specs):
            pooled.extend(
                build_proxy_training_set(
                    primary, spec, cfg.corpus, table, seed=child_seed(cfg.seed, i)
                )
            )
        clf = train_proxy_classifier(pooled, table, seed=child_seed(cfg.seed, 100))
        provenance = {"proxies": [s.describe() for s in specs], "pooled": True}
        groups.append(
            mine_candidates(
                clf, table, cfg.corpus, cfg.form,
                threshold=cfg.threshold, provenance=provenance,
            )
        )
    else:
        for i, spec in enumerate(specs):
            training = build_proxy_training_set(
                primary, spec, cfg.corpus, table, seed=child_seed(cfg.seed, i)
            )
            clf = train_proxy_classifier(
                training, table, seed=child_seed(cfg.seed, 100 + i)
            )
            provenance = {"proxy": spec.describe(), "pooled": False}
            groups.append(
                mine_candidates(
                    clf, table, cfg.corpus, cfg.form,
                    threshold=cfg.threshold, provenance=provenance,
                )
            )
    candidates = union_candidates(groups)
    write_candidates(candidates, outdir / "candidates.jsonl")
    _write_run_config(cfg, outdir)
    print(
        f"mined {len(candidates)} candidate(s) for {cfg.form!r} "
        f"-> {outdir / 'candidates.jsonl'}"
    )
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    cfg = _resolve(args, "plot")
    if not cfg.reports:
        raise ConfigurationError("plot requires --reports")
    from .util import read_json

    reports = []
    for raw_path in cfg.reports:
        p = Path(raw_path)
        paths = sorted(p.glob("*.json")) if p.is_dir() else [p]
        for path in paths:
            try:
                raw = read_json(path)
            except Exception:
                continue
            if isinstance(raw, dict) and raw.get("kind") == "eval_report":
                reports.append(EvalReport.from_dict(raw))
    if not reports:
        raise ConfigurationError("no eval reports found under --reports")
    from .plots import emit_all

    outdir = _outdir(cfg)
    written = emit_all(reports, outdir)
    _write_run_config(cfg, outdir)
    print(f"wrote {len(written)} chart(s): {', '.join(written)}")
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    cfg = _resolve(args, "gradcheck")
    rng = rng_for(cfg.seed, 0)
    worst = 0.0
    failures = []
    for i in range(cfg.instances):
        input_dim = int(rng.integers(2, 7))
        hidden = int(rng.integers(3, 8))
        classes = int(rng.integers(2, 5))
        mlp = create_mlp(
            input_dim, classes, seed=child_seed(cfg.seed, i, 0),
            hidden_size=hidden,
        )
        x = rng.normal(size=input_dim)
        label = int(rng.integers(0, classes))
        report = check_mlp_gradients(mlp, x, label, tolerance=cfg.tolerance)
        worst = max(worst, report.max_rel_error)
        if not report.passed:
            failures.append((f"mlp[{i}]", report))

        seq_len = int(rng.integers(1, 5))
        enc = create_bilstm(input_dim, hidden, seed=child_seed(cfg.seed, i, 1))
        head = create_mlp(
            2 * hidden, classes, seed=child_seed(cfg.seed, i, 2),
            hidden_size=hidden,
        )
        xs = [rng.normal(size=input_dim) for _ in range(seq_len)]
        report = check_bilstm_mlp_gradients(
            enc, head, xs, label, tolerance=cfg.tolerance
        )
        worst = max(worst, report.max_rel_error)
        if not report.passed:
            failures.append((f"bilstm_mlp[{i}]", report))

    if failures:
        for name, report in failures:
            print(f"{name}: {report.summary()}", file=sys.stderr)
        print(
            f"gradcheck FAILED on {len(failures)} of {2 * cfg.instances} instances",
            file=sys.stderr,
        )
        return 1
    print(
        f"gradcheck passed: {2 * cfg.instances} instances "
        f"(max relative error {worst:.3e}, tolerance {cfg.tolerance:g})"
    )
    if args.out is not None:
        outdir = _outdir(cfg)
        write_json(
            outdir / "gradcheck.json",
            {
                "instances": cfg.instances,
                "tolerance": cfg.tolerance,
                "max_rel_error": worst,
                "passed": True,
            },
        )
        _write_run_config(cfg, outdir)
    return 0


# ---------------------------------------------------------------------------
# Parser

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value config file to preload")
    sub.add_argument("--out", help="output directory (default homdis-out)")
    sub.add_argument("--seed", type=int, help="base random seed (default 0)")
    sub.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homdis",
        description="Homograph disambiguation benchmark toolkit",
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="COMMAND")

    p = sub.add_parser("validate", help="validate challenge sets, emit a manifest")
    p.add_argument("--sets", nargs="+", help="challenge-set JSONL files")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("embed-describe", help="print an embedding file's header")
    p.add_argument("--emb", help="HXE1 embedding file")
    _add_common(p)
    p.set_defaults(func=cmd_embed_describe)

    p = sub.add_parser("train-expert", help="train one word expert on a full set")
    p.add_argument("--set", dest="sets", action="append", help="challenge set")
    p.add_argument("--mode", choices=["contextual", "baseline"])
    p.add_argument("--emb", help="HXE1 embedding file (contextual)")
    p.add_argument("--vectors", help="word-vector file (baseline)")
    p.add_argument("--aggregation", choices=["first", "sum", "average"])
    p.add_argument("--lenient", dest="strict", action="store_false", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_train_expert)

    p = sub.add_parser("eval-cv", help="stratified k-fold cross-validation")
    p.add_argument("--set", dest="sets", action="append")
    p.add_argument("--manifest", help="dataset manifest for a full sweep")
    p.add_argument("--emb-dir", dest="emb_dir", help="per-set embeddings directory")
    p.add_argument("--mode", choices=["contextual", "baseline", "centroid"])
    p.add_argument("--emb")
    p.add_argument("--vectors")
    p.add_argument("--aggregation", choices=["first", "sum", "average"])
    p.add_argument("--metric", choices=["dot", "cosine"])
    p.add_argument("--k", type=int, help="fold count (default 10)")
    p.add_argument("--jobs", type=int, help="parallel experts for sweeps")
    p.add_argument("--lenient", dest="strict", action="store_false", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_eval_cv)

    p = sub.add_parser("eval-fewshot", help="few-shot rounds, mean-of-rounds report")
    p.add_argument("--set", dest="sets", action="append")
    p.add_argument("--manifest")
    p.add_argument("--emb-dir", dest="emb_dir")
    p.add_argument("--mode", choices=["mlp", "contextual", "centroid", "baseline"])
    p.add_argument("--emb")
    p.add_argument("--vectors")
    p.add_argument("--aggregation", choices=["first", "sum", "average"])
    p.add_argument("--metric", choices=["dot", "cosine"])
    p.add_argument("--n", type=_int_list, help="sizes, e.g. 100,50,25,10,5")
    p.add_argument("--rounds", type=int, help="default: 10 (mlp), 200 (centroid)")
    p.add_argument("--jobs", type=int)
    p.add_argument("--lenient", dest="strict", action="store_false", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_eval_fewshot)

    p = sub.add_parser("probe-centroid", help="centroid probing protocol")
    p.add_argument("--set", dest="sets", action="append")
    p.add_argument("--emb")
    p.add_argument("--aggregation", choices=["first", "sum", "average"])
    p.add_argument("--metric", choices=["dot", "cosine"])
    p.add_argument("--n", type=_int_list, help="sizes (default 100)")
    p.add_argument("--rounds", type=int, help="default 200")
    _add_common(p)
    p.set_defaults(func=cmd_probe_centroid)

    p = sub.add_parser("bucket-report", help="aggregate reports into buckets")
    p.add_argument("--reports", nargs="+", help="report files or directories")
    p.add_argument(
        "--dimension",
        choices=["category", "analysis_count", "skew_ratio", "piece_count", "masked"],
    )
    p.add_argument("--skew-edges", dest="skew_edges", type=_float_list)
    _add_common(p)
    p.set_defaults(func=cmd_bucket_report)

    p = sub.add_parser("mine", help="candidate mining for rare analyses")
    p.add_argument("--corpus", help="line-per-sentence UTF-8 corpus")
    p.add_argument("--form", help="target homograph form")
    p.add_argument(
        "--initial-sample", dest="initial_sample", type=int,
        help="step 1: reservoir-sample N sentences containing the form",
    )
    p.add_argument("--vectors", help="word-vector file")
    p.add_argument("--primary", help="JSONL of known primary instances")
    p.add_argument(
        "--proxy", type=lambda s: s.split(","),
        help="comma list of morph-contrast,w2v-distant,random",
    )
    p.add_argument("--proxy-words", dest="proxy_words", help="word list file (A)")
    p.add_argument("--distance-count", dest="distance_count", type=int)
    p.add_argument("--sample-size", dest="sample_size", type=int)
    p.add_argument("--threshold", type=float, help="opposing-class cutoff (0.5)")
    p.add_argument("--pooled", action="store_true", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("plot", help="emit standard charts from reports")
    p.add_argument("--reports", nargs="+")
    _add_common(p)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--instances", type=int, help="instances per architecture (100)")
    p.add_argument("--tolerance", type=float, help="relative error bound (1e-4)")
    _add_common(p)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return 2
    try:
        return args.func(args)
    except HomdisError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
