"""Static chart emission for experiment reports. Presentation only."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evalharness import (
    DEFAULT_SKEW_EDGES,
    EvalReport,
    _bucket_key,
    bucket_report,
)


def _scenario_label(report: EvalReport) -> str:
    scenario = report.scenario
    label = scenario.get("kind", "?")
    provider = scenario.get("provider")
    if provider:
        label = f"{label}:{provider}"
    if scenario.get("masked"):
        label += " [masked]"
    return label


def _save_bars(
    labels: Sequence[str], values: Sequence[float], title: str,
    ylabel: str, path: Path,
) -> None:
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(labels) + 1.5), 3.6))
    ax.bar(range(len(labels)), values, color="#4878b0")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_model_comparison(reports: Sequence[EvalReport], path: Path) -> bool:
    """Mean macro-F1 per scenario, full-training (CV) reports only."""
    groups: dict[str, list[float]] = {}
    for r in reports:
        if r.mode != "cv":
            continue
        groups.setdefault(_scenario_label(r), []).append(r.macro_f1)
    if not groups:
        return False
    labels = sorted(groups)
    _save_bars(
        labels,
        [float(np.mean(groups[l])) for l in labels],
        "Cumulative score by model",
        "mean macro-F1",
        path,
    )
    return True


def plot_bucket_dimension(
    reports: Sequence[EvalReport], dimension: str, path: Path,
    skew_edges: Sequence[float] = DEFAULT_SKEW_EDGES,
) -> bool:
    rows = [
        r for r in bucket_report(reports, dimension, skew_edges) if r["count"] > 0
    ]
    if not rows:
        return False
    _save_bars(
        [r["bucket"] for r in rows],
        [r["mean_macro_f1"] for r in rows],
        f"Score by {dimension.replace('_', ' ')}",
        "mean macro-F1",
        path,
    )
    return True


def plot_skew_masked(
    reports: Sequence[EvalReport], path: Path,
    skew_edges: Sequence[float] = DEFAULT_SKEW_EDGES,
) -> bool:
    """Unmasked vs masked means across skew buckets (paired bars)."""
    buckets: dict[str, dict[bool, list[float]]] = {}
    for r in reports:
        masked = r.scenario.get("masked")
        if masked is None:
            continue
        key = _bucket_key(r, "skew_ratio", skew_edges)
        buckets.setdefault(key, {}).setdefault(bool(masked), []).append(r.macro_f1)
    pairs = {
        k: v for k, v in buckets.items() if True in v and False in v
    }
    if not pairs:
        return False
    labels = sorted(pairs)
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(labels) + 1.5), 3.6))
    ax.bar(x - 0.2, [np.mean(pairs[l][False]) for l in labels], 0.4, label="unmasked")
    ax.bar(x + 0.2, [np.mean(pairs[l][True]) for l in labels], 0.4, label="masked")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("mean macro-F1")
    ax.set_title("Unmasked vs masked across skew buckets", fontsize=10)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def plot_fewshot_curve(reports: Sequence[EvalReport], path: Path) -> bool:
    """Mean macro-F1 against training-sample size, one series per scenario."""
    series: dict[str, dict[int, list[float]]] = {}
    for r in reports:
        if r.mode != "fewshot":
            continue
        n = int(r.params["n_per_analysis"])
        series.setdefault(r.scenario.get("kind", "?"), {}).setdefault(n, []).append(
            r.macro_f1
        )
    if not series:
        return False
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for kind in sorted(series):
        ns = sorted(series[kind])
        ys = [float(np.mean(series[kind][n])) for n in ns]
        ax.plot(ns, ys, marker="o", label=kind)
    ax.set_xscale("log")
    ax.set_xlabel("training sentences per analysis")
    ax.set_ylabel("mean macro-F1")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("Few-shot performance", fontsize=10)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def emit_all(reports: Sequence[EvalReport], outdir: Path) -> list[str]:
    """Write whichever standard charts the given reports support."""
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    jobs = [
        ("model_comparison.png", lambda p: plot_model_comparison(reports, p)),
        ("category.png", lambda p: plot_bucket_dimension(reports, "category", p)),
        (
            "analysis_count.png",
            lambda p: plot_bucket_dimension(reports, "analysis_count", p),
        ),
        (
            "piece_count.png",
            lambda p: plot_bucket_dimension(reports, "piece_count", p),
        ),
        ("skew_masked.png", lambda p: plot_skew_masked(reports, p)),
        ("fewshot.png", lambda p: plot_fewshot_curve(reports, p)),
    ]
    for name, fn in jobs:
        target = outdir / name
        if fn(target):
            written.append(name)
    return written
