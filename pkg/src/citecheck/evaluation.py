"""Retrieval metrics, failed-citation detection curves, the URL-depth
baseline, and annotation statistics (majority vote, Fleiss' kappa, exact sign
test, score bucketing)."""

from __future__ import annotations

import csv
import json
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path
from typing import Hashable, Sequence
from urllib.parse import urlparse


class EmptyInputError(ValueError):
    """A metric was asked to average over zero instances."""


class DegenerateInputError(ValueError):
    """The detection task needs at least one positive and one negative."""


class DegenerateAgreementError(ValueError):
    """Chance agreement is 1 (all mass in a single category)."""


class MalformedUrlError(ValueError):
    """URL cannot be parsed into scheme/host/path."""


class NoInformativeError(ValueError):
    """Sign test received zero untied pairs."""


@dataclass(frozen=True)
class RankedResult:
    """One instance's document ranking (deduplicated by document)."""

    instance_id: str
    gold_url: str
    ranked_urls: tuple[str, ...]

    def __post_init__(self):
        if len(self.ranked_urls) != len(set(self.ranked_urls)):
            raise ValueError("ranked_urls must be duplicate-free")


@dataclass(frozen=True)
class PRPoint:
    recall: float
    precision: float


def precision_at_1(results: Sequence[RankedResult]) -> float:
    """Fraction of instances whose gold document is ranked first."""
    if not results:
        raise EmptyInputError("no results to score")
    hits = sum(1 for r in results if r.ranked_urls and r.ranked_urls[0] == r.gold_url)
    return hits / len(results)


def success_rate_at_k(results: Sequence[RankedResult], k: int) -> float:
    """Fraction of instances whose gold document appears in the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not results:
        raise EmptyInputError("no results to score")
    hits = sum(1 for r in results if r.gold_url in r.ranked_urls[:k])
    return hits / len(results)


def url_depth(url: str) -> int:
    """Number of non-empty path segments after the host.

    Query strings and fragments are ignored; a trailing slash adds nothing.
    Shallow, over-generic URLs correlate with citations that fail
    verification.
    """
    parts = urlparse(url)
    if not parts.scheme or not parts.netloc:
        raise MalformedUrlError(f"not an absolute URL: {url!r}")
    return sum(1 for segment in parts.path.split("/") if segment)


def pr_curve_failed(
    scored: Sequence[tuple[Hashable, float, bool]],
) -> list[PRPoint]:
    """Precision-recall sweep for detecting failed citations by low score.

    Citations are sorted ascending by score (ties by id) and every prefix is
    a detection cutoff: precision = failed in prefix / prefix size, recall =
    failed in prefix / total failed.
    """
    total_failed = sum(1 for _, _, failed in scored if failed)
    if total_failed == 0 or total_failed == len(scored):
        raise DegenerateInputError("need at least one failed and one non-failed citation")
    ordered = sorted(scored, key=lambda item: (item[1], str(item[0])))
    points = []
    failed_seen = 0
    for i, (_, _, failed) in enumerate(ordered, start=1):
        if failed:
            failed_seen += 1
        points.append(PRPoint(recall=failed_seen / total_failed, precision=failed_seen / i))
    return points


def precision_at_recall(points: Sequence[PRPoint], target_recall: float) -> float:
    """Best precision over sweep points reaching at least the target recall."""
    eligible = [p.precision for p in points if p.recall >= target_recall]
    if not eligible:
        raise ValueError(f"no sweep point reaches recall {target_recall}")
    return max(eligible)


def fleiss_kappa(counts: Sequence[Sequence[int]]) -> float:
    """Chance-corrected multi-rater agreement over an items x categories table.

    Every row must sum to the same number of raters n >= 2.
    """
    if not counts:
        raise EmptyInputError("no items")
    n_raters = sum(counts[0])
    if n_raters < 2:
        raise ValueError("need at least 2 ratings per item")
    for row in counts:
        if sum(row) != n_raters:
            raise ValueError("all rows must sum to the same number of raters")
    n_items = len(counts)
    n_categories = len(counts[0])

    p_i = [
        (sum(c * c for c in row) - n_raters) / (n_raters * (n_raters - 1)) for row in counts
    ]
    p_bar = sum(p_i) / n_items
    p_j = [sum(row[j] for row in counts) / (n_items * n_raters) for j in range(n_categories)]
    p_e = sum(p * p for p in p_j)
    if p_e >= 1.0:
        raise DegenerateAgreementError("all ratings fall in a single category")
    return (p_bar - p_e) / (1 - p_e)


def majority_vote(labels: Sequence[Hashable]):
    """Strict plurality winner, or None when the top count is tied."""
    if not labels:
        raise ValueError("need at least one label")
    counts = Counter(labels).most_common()
    if len(counts) > 1 and counts[0][1] == counts[1][1]:
        return None
    return counts[0][0]


def sign_test(wins_a: int, wins_b: int) -> tuple[float, float]:
    """Exact two-sided binomial sign test over untied paired preferences.

    one_tail = P(X >= max(wins)) under Binomial(n, 1/2), computed with exact
    rationals; two_tail = min(1, 2 * one_tail).
    """
    if wins_a < 0 or wins_b < 0:
        raise ValueError("win counts must be non-negative")
    n = wins_a + wins_b
    if n == 0:
        raise NoInformativeError("sign test needs at least one untied pair")
    k = max(wins_a, wins_b)
    one_tail = Fraction(sum(comb(n, i) for i in range(k, n + 1)), 2**n)
    two_tail = min(Fraction(1), 2 * one_tail)
    return float(one_tail), float(two_tail)


def bucket_by_score(
    items: Sequence[tuple[Hashable, float]], edges: Sequence[float]
) -> list[list[tuple[Hashable, float]]]:
    """Assign items to half-open score bins split at the given edges.

    Edges [e0, ..., em] produce m+2 buckets: (-inf, e0), [e0, e1), ...,
    [em, +inf).  A score exactly on an edge lands in the bucket to its right.
    """
    edges = list(edges)
    if any(edges[i] >= edges[i + 1] for i in range(len(edges) - 1)):
        raise ValueError("edges must be strictly increasing")
    buckets: list[list[tuple[Hashable, float]]] = [[] for _ in range(len(edges) + 1)]
    for item_id, score in items:
        buckets[bisect_right(edges, score)].append((item_id, score))
    return buckets


@dataclass
class MetricReport:
    """Named metric values plus any PR curves, serializable to JSON/CSV."""

    metrics: dict[str, float] = field(default_factory=dict)
    curves: dict[str, list[PRPoint]] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "metrics": self.metrics,
            "curves": {
                name: [[p.recall, p.precision] for p in points]
                for name, points in self.curves.items()
            },
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def write_curves_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["curve", "recall", "precision"])
            for name, points in sorted(self.curves.items()):
                for p in points:
                    writer.writerow([name, f"{p.recall:.6f}", f"{p.precision:.6f}"])
