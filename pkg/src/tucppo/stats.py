"""Across-trial summaries: mean/std, 95% normal intervals, raw samples for density plots."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass

Z_95 = 1.96


@dataclass(frozen=True)
class RunOutcome:
    r: float
    seed: int
    final_coop_fraction: float
    iterations_run: int


@dataclass(frozen=True)
class CISummary:
    r: float
    n: int
    mean: float
    std: float
    ci_low: float
    ci_high: float


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def summarize(r: float, values) -> CISummary:
    """Mean, sample std and ``mean +- 1.96 std / sqrt(n)``.

    A group with zero spread gets a NaN interval; bounds are never clipped
    to [0, 1].
    """
    values = sorted(float(v) for v in values)
    n = len(values)
    if n < 2:
        raise ValueError(f"need at least 2 trials per group, r={r} has {n}")
    mean, std = _mean_std(values)
    if std == 0.0:
        return CISummary(r, n, mean, 0.0, math.nan, math.nan)
    half = Z_95 * std / math.sqrt(n)
    return CISummary(r, n, mean, std, mean - half, mean + half)


def aggregate(outcomes) -> list[CISummary]:
    """Group outcomes by ``r`` and summarize each group, ordered by ``r``."""
    groups: dict[float, list[float]] = defaultdict(list)
    for o in outcomes:
        groups[o.r].append(o.final_coop_fraction)
    return [summarize(r, groups[r]) for r in sorted(groups)]


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def write_violin(path, outcomes) -> int:
    """One row per trial, sorted by (r, seed). Returns the number of data rows."""
    rows = sorted(outcomes, key=lambda o: (o.r, o.seed))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "seed", "final_coop_fraction"])
        for o in rows:
            w.writerow([_fmt(o.r), o.seed, _fmt(o.final_coop_fraction)])
    return len(rows)


def write_ci_table(path, summaries_by_algorithm: dict[str, list[CISummary]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "r", "mean", "std", "ci_low", "ci_high"])
        for algo, rows in summaries_by_algorithm.items():
            for s in rows:
                w.writerow([algo, _fmt(s.r), _fmt(s.mean), _fmt(s.std), _fmt(s.ci_low), _fmt(s.ci_high)])


def write_errbar(path, summaries_by_algorithm: dict[str, list[CISummary]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "r", "mean", "std"])
        for algo, rows in summaries_by_algorithm.items():
            for s in rows:
                w.writerow([algo, _fmt(s.r), _fmt(s.mean), _fmt(s.std)])


def read_ci_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: (v if k == "algorithm" else float(v)) for k, v in row.items()}
                for row in csv.DictReader(fh)]
