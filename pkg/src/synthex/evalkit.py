"""Scoring against gold records and the experiment sweeps.

Every (paragraph, slot) pair lands in exactly one confusion-matrix cell, so
cell totals always equal paragraphs x 10. Comparison is string equality after
case-folding and whitespace collapse; a wrong non-empty prediction counts as
a false positive only. Sweeps (K, pool size, ordering) report per-trial
metrics with a normal-approximation 95% confidence interval.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .extractor import ExtractionConfig, ExtractionResult, Extractor
from .promptkit import ShotOrdering
from .records import SLOTS, SynthesisRecord
from .retrieval import DemonstrationPool
from .textutil import normalize_for_match

OUTCOMES = ("TP", "FP", "TN", "FN")


class EvalError(Exception):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def add(self, outcome: str) -> "ConfusionMatrix":
        if outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {outcome!r}")
        return ConfusionMatrix(
            tp=self.tp + (outcome == "TP"),
            fp=self.fp + (outcome == "FP"),
            tn=self.tn + (outcome == "TN"),
            fn=self.fn + (outcome == "FN"),
        )

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class MetricSet:
    """Derived metrics; undefined denominators surface as None, never 0."""

    acc: float | None
    precision: float | None
    recall: float | None
    f1: float | None

    @classmethod
    def from_matrix(cls, m: ConfusionMatrix) -> "MetricSet":
        acc = (m.tp + m.tn) / m.total if m.total else None
        precision = m.tp / (m.tp + m.fp) if (m.tp + m.fp) else None
        recall = m.tp / (m.tp + m.fn) if (m.tp + m.fn) else None
        if precision is None or recall is None or (precision + recall) == 0:
            f1 = None
        else:
            f1 = 2 * precision * recall / (precision + recall)
        return cls(acc=acc, precision=precision, recall=recall, f1=f1)

    def to_dict(self) -> dict:
        return {"acc": self.acc, "precision": self.precision, "recall": self.recall, "f1": self.f1}


def classify_slot(predicted: str | None, gold: str | None) -> str:
    """Assign one confusion cell to a (predicted, gold) slot pair.

    Values are compared case-folded with collapsed whitespace. A non-empty
    wrong prediction against non-empty gold is a false positive only, keeping
    cell totals equal to the number of scored slots.
    """
    if gold is not None and predicted is not None:
        return "TP" if normalize_for_match(predicted) == normalize_for_match(gold) else "FP"
    if gold is not None:
        return "FN"
    return "FP" if predicted is not None else "TN"


def score_pair(predicted: SynthesisRecord, gold: SynthesisRecord) -> dict[str, str]:
    """Per-slot outcomes for one paragraph."""
    return {slot: classify_slot(predicted.get(slot), gold.get(slot)) for slot in SLOTS}


def score_run(
    results: Sequence[ExtractionResult],
    gold: Mapping[str, SynthesisRecord],
) -> tuple[ConfusionMatrix, MetricSet]:
    """Score a run; requires gold for every scored paragraph."""
    matrix = ConfusionMatrix()
    for result in results:
        if result.paragraph_id not in gold:
            raise EvalError(f"no gold record for paragraph {result.paragraph_id}")
        for outcome in score_pair(result.record, gold[result.paragraph_id]).values():
            matrix = matrix.add(outcome)
    expected = len(results) * len(SLOTS)
    if matrix.total != expected:
        raise EvalError(f"matrix total {matrix.total} != paragraphs x 10 = {expected}")
    return matrix, MetricSet.from_matrix(matrix)


def per_slot_matrices(
    results: Sequence[ExtractionResult], gold: Mapping[str, SynthesisRecord]
) -> dict[str, ConfusionMatrix]:
    """One confusion matrix per condition slot (heatmap fodder)."""
    matrices = {slot: ConfusionMatrix() for slot in SLOTS}
    for result in results:
        outcomes = score_pair(result.record, gold[result.paragraph_id])
        for slot, outcome in outcomes.items():
            matrices[slot] = matrices[slot].add(outcome)
    return matrices


# --- statistics -----------------------------------------------------------------


def mean_and_ci(values: Sequence[float]) -> tuple[float, float | None]:
    """Sample mean and normal-approximation 95% CI half-width (needs >= 2 values)."""
    if not values:
        raise EvalError("no values")
    if all(v == values[0] for v in values):
        # Exact: identical trials have zero spread (no float round-off noise).
        return values[0], (0.0 if len(values) >= 2 else None)
    mean = sum(values) / len(values)
    if len(values) < 2:
        return mean, None
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    half = 1.96 * math.sqrt(var) / math.sqrt(len(values))
    return mean, half


def two_sample_t(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Welch two-sample t-test; returns (statistic, two-sided p-value)."""
    from scipy import stats

    result = stats.ttest_ind(list(a), list(b), equal_var=False)
    return float(result.statistic), float(result.pvalue)


# --- experiment harness ------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentReport:
    config: dict
    trial_metrics: tuple[MetricSet, ...]
    mean: dict[str, float | None]
    ci_half_width: dict[str, float | None]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "trials": [m.to_dict() for m in self.trial_metrics],
            "mean": self.mean,
            "ci_half_width": self.ci_half_width,
        }


def _summarize(config: dict, trials: Sequence[MetricSet]) -> ExperimentReport:
    mean: dict[str, float | None] = {}
    ci: dict[str, float | None] = {}
    for name in ("acc", "precision", "recall", "f1"):
        values = [getattr(m, name) for m in trials]
        if any(v is None for v in values):
            mean[name] = None
            ci[name] = None
        else:
            mean[name], ci[name] = mean_and_ci(values)
    return ExperimentReport(
        config=config, trial_metrics=tuple(trials), mean=mean, ci_half_width=ci
    )


class EvalHarness:
    """Runs extraction experiments over a fixed query set with gold records.

    ``make_extractor`` builds an Extractor over any demonstration sub-pool so
    pool-size trials can resample. Demonstration ids equal paragraph ids, so
    passing the query's id through to retrieval enforces leave-one-out
    self-exclusion.
    """

    def __init__(
        self,
        make_extractor: Callable[[DemonstrationPool], Extractor],
        pool: DemonstrationPool,
        queries: Sequence[tuple[str, str]],  # (paragraph id, text)
        gold: Mapping[str, SynthesisRecord],
    ) -> None:
        self.make_extractor = make_extractor
        self.pool = pool
        self.queries = list(queries)
        self.gold = gold

    def run_once(
        self,
        config: ExtractionConfig,
        pool: DemonstrationPool | None = None,
    ) -> tuple[list[ExtractionResult], MetricSet]:
        active_pool = pool if pool is not None else self.pool
        extractor = self.make_extractor(active_pool)
        results = extractor.extract_many(self.queries, config)
        _, metrics = score_run(results, self.gold)
        return results, metrics

    def sweep_k(
        self,
        k_values: Sequence[int],
        trials: int = 1,
        algo: str = "bm25",
        ordering: ShotOrdering | None = None,
        seed: int = 0,
    ) -> list[ExperimentReport]:
        """One report per K, in the given order. K=0 runs zero-shot."""
        reports = []
        for k in k_values:
            trial_metrics = []
            for trial in range(trials):
                config = self._config(k, algo, ordering, seed + trial)
                _, metrics = self.run_once(config)
                trial_metrics.append(metrics)
            reports.append(
                self._report(
                    {"sweep": "k", "k": k, "algo": algo, "trials": trials, "seed": seed},
                    trial_metrics,
                )
            )
        return reports

    def sweep_pool_size(
        self,
        sizes: Sequence[int],
        trials: int = 5,
        k: int = 4,
        algo: str = "bm25",
        ordering: ShotOrdering | None = None,
        seed: int = 0,
    ) -> list[ExperimentReport]:
        """Random sub-pool per (size, trial); mean and CI per size."""
        pool_ids = [d.id for d in self.pool.entries]
        reports = []
        for size in sizes:
            if size > self.pool.n:
                raise EvalError(f"pool size {size} exceeds pool of {self.pool.n}")
            trial_metrics = []
            for trial in range(trials):
                if size == 0:
                    config = self._config(0, algo, ordering, seed + trial)
                    _, metrics = self.run_once(config)
                else:
                    rng = random.Random(seed * 1_000_003 + size * 1_009 + trial)
                    sampled = self.pool.subset(rng.sample(pool_ids, size))
                    effective_k = min(k, size)
                    config = self._config(effective_k, algo, ordering, seed + trial)
                    _, metrics = self.run_once(config, pool=sampled)
                trial_metrics.append(metrics)
            reports.append(
                self._report(
                    {
                        "sweep": "pool_size",
                        "size": size,
                        "k": k,
                        "algo": algo,
                        "trials": trials,
                        "seed": seed,
                    },
                    trial_metrics,
                )
            )
        return reports

    def compare_orderings(
        self,
        orderings: Sequence[ShotOrdering],
        k: int = 4,
        algo: str = "bm25",
        seed: int = 0,
    ) -> list[tuple[ExperimentReport, list[ExtractionResult]]]:
        """Per-ordering metrics over identical shot multisets per query."""
        out = []
        baseline_multisets: dict[str, frozenset] | None = None
        for ordering in orderings:
            config = self._config(k, algo, ordering, seed)
            results, metrics = self.run_once(config)
            multisets = {r.paragraph_id: frozenset(r.shot_ids) for r in results}
            if baseline_multisets is None:
                baseline_multisets = multisets
            elif multisets != baseline_multisets:
                raise EvalError("shot multisets differ across orderings")
            report = self._report(
                {
                    "sweep": "ordering",
                    "ordering": ordering.strategy.value,
                    "ordering_seed": ordering.seed,
                    "k": k,
                    "algo": algo,
                },
                [metrics],
            )
            out.append((report, results))
        return out

    def _config(
        self, k: int, algo: str, ordering: ShotOrdering | None, seed: int
    ) -> ExtractionConfig:
        kwargs = {"seed": seed}
        if ordering is not None:
            kwargs["ordering"] = ordering
        if k == 0:
            return ExtractionConfig.zero_shot(**kwargs)
        return ExtractionConfig.few_shot(k=k, algo=algo, **kwargs)

    @staticmethod
    def _report(config: dict, trials: Sequence[MetricSet]) -> ExperimentReport:
        return _summarize(config, trials)


# --- report files ---------------------------------------------------------------------


def write_reports_json(reports: Sequence[ExperimentReport], path: str | Path) -> None:
    payload = {
        "slot_outcome_note": (
            "A non-empty wrong prediction against non-empty gold counts as FP only, "
            "so cell totals equal paragraphs x 10."
        ),
        "reports": [r.to_dict() for r in reports],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_plot_table(reports: Sequence[ExperimentReport], path: str | Path) -> None:
    """Plot-ready CSV: one row per report with mean and CI columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["sweep", "x", "mean_f1", "ci_f1", "mean_acc", "ci_acc", "mean_precision", "mean_recall"]
        )
        for report in reports:
            cfg = report.config
            x = cfg.get("k", cfg.get("size", cfg.get("ordering", "")))
            writer.writerow(
                [
                    cfg.get("sweep", ""),
                    x,
                    _fmt(report.mean.get("f1")),
                    _fmt(report.ci_half_width.get("f1")),
                    _fmt(report.mean.get("acc")),
                    _fmt(report.ci_half_width.get("acc")),
                    _fmt(report.mean.get("precision")),
                    _fmt(report.mean.get("recall")),
                ]
            )


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(value)
