"""Merge sparse and dense candidate lists into one evidence set with provenance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence


@dataclass
class Candidate:
    """One retrieved passage and where it came from (ranks are 1-based)."""

    passage_id: str
    doc_url: str
    sparse_rank: int | None = None
    dense_rank: int | None = None
    sparse_score: float | None = None
    dense_score: float | None = None


def merge(
    sparse_top: Sequence[tuple[str, float]],
    dense_top: Sequence[tuple[str, float]],
    doc_url_of: Callable[[str], str],
) -> list[Candidate]:
    """Union of both candidate lists, keyed by passage id.

    Passages found by both retrievers get both provenance fields.  Output
    order interleaves the two lists by rank (sparse first), skipping
    duplicates; scores are left on their native, incomparable scales and any
    reranking happens downstream.
    """
    for name, top in (("sparse", sparse_top), ("dense", dense_top)):
        ids = [pid for pid, _ in top]
        if len(ids) != len(set(ids)):
            raise ValueError(f"{name} candidate list contains duplicate passage ids")

    by_id: dict[str, Candidate] = {}
    for rank, (pid, score) in enumerate(sparse_top, start=1):
        by_id[pid] = Candidate(pid, doc_url_of(pid), sparse_rank=rank, sparse_score=score)
    for rank, (pid, score) in enumerate(dense_top, start=1):
        if pid in by_id:
            by_id[pid].dense_rank = rank
            by_id[pid].dense_score = score
        else:
            by_id[pid] = Candidate(pid, doc_url_of(pid), dense_rank=rank, dense_score=score)

    merged: list[Candidate] = []
    seen: set[str] = set()
    for i in range(max(len(sparse_top), len(dense_top))):
        for top in (sparse_top, dense_top):
            if i < len(top):
                pid = top[i][0]
                if pid not in seen:
                    seen.add(pid)
                    merged.append(by_id[pid])
    return merged
