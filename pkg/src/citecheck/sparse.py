"""Okapi BM25 over passages: inverted index, scoring, search, query building."""

from __future__ import annotations

import json
import math
import re
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator

from .corpus import ClaimContext, Passage

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric run; drops empty tokens."""
    return _TOKEN.findall(text.lower())


class EmptyCorpusError(ValueError):
    """The index was asked to build over zero passages."""


class UnknownPassageError(KeyError):
    """A passage id is not present in the index."""


@dataclass(frozen=True)
class SparseQuery:
    """A bag of query tokens; duplicates count and act as term boosts."""

    terms: tuple[str, ...]

    def counted(self) -> list[tuple[str, int]]:
        """Unique terms with multiplicities, in first-appearance order."""
        counts: dict[str, int] = {}
        for t in self.terms:
            counts[t] = counts.get(t, 0) + 1
        return list(counts.items())


def build_query(ctx: ClaimContext, expansion: Sequence[str] = ()) -> SparseQuery:
    """Article title tokens + claim sentence tokens + expansion terms (multiset union)."""
    terms = tokenize(ctx.article_title) + tokenize(ctx.claim_sentence) + list(expansion)
    return SparseQuery(tuple(terms))


class Bm25Index(BaseEstimator):
    """Okapi BM25 inverted index with a non-negative idf variant.

    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), which stays positive even
    for terms appearing in more than half the corpus.
    """

    FORMAT = "citecheck-bm25/1"

    def __init__(self, k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b

    def fit(self, passages: Iterable[Passage]) -> "Bm25Index":
        postings: dict[str, list[tuple[str, int]]] = {}
        doc_len: dict[str, int] = {}
        for p in passages:
            pid = p.passage_id
            if pid in doc_len:
                raise ValueError(f"duplicate passage id: {pid!r}")
            tokens = tokenize(p.text)
            doc_len[pid] = len(tokens)
            counts: dict[str, int] = {}
            for t in tokens:
                counts[t] = counts.get(t, 0) + 1
            for t, tf in counts.items():
                postings.setdefault(t, []).append((pid, tf))
        if not doc_len:
            raise EmptyCorpusError("cannot build an index over zero passages")
        for plist in postings.values():
            plist.sort(key=lambda entry: entry[0])
        self.postings_ = postings
        self.doc_len_ = doc_len
        self.n_passages_ = len(doc_len)
        self.avgdl_ = sum(doc_len.values()) / len(doc_len)
        return self

    def df(self, term: str) -> int:
        return len(self.postings_.get(term, ()))

    def idf(self, term: str) -> float:
        n, df = self.n_passages_, self.df(term)
        return math.log(1 + (n - df + 0.5) / (df + 0.5))

    def _tf(self, term: str, passage_id: str) -> int:
        plist = self.postings_.get(term)
        if not plist:
            return 0
        i = bisect_left(plist, (passage_id,))
        if i < len(plist) and plist[i][0] == passage_id:
            return plist[i][1]
        return 0

    def _term_weight(self, term: str, tf: int, length: int) -> float:
        norm = self.k1 * (1 - self.b + self.b * length / self.avgdl_)
        return self.idf(term) * tf * (self.k1 + 1) / (tf + norm)

    def score(self, query: SparseQuery, passage_id: str) -> float:
        """BM25 score of one passage; query terms absent from it contribute 0."""
        if passage_id not in self.doc_len_:
            raise UnknownPassageError(passage_id)
        length = self.doc_len_[passage_id]
        score = 0.0
        for term, count in query.counted():
            tf = self._tf(term, passage_id)
            if tf == 0:
                continue
            score += count * self._term_weight(term, tf, length)
        return score

    def search(self, query: SparseQuery, k: int) -> list[tuple[str, float]]:
        """Top-k passages by BM25, descending; ties broken by ascending id.

        Only passages containing at least one query term are returned, so all
        scores are > 0.  Accumulation mirrors score() term for term, making
        the two bit-identical.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        acc: dict[str, float] = {}
        for term, count in query.counted():
            plist = self.postings_.get(term)
            if not plist:
                continue
            for pid, tf in plist:
                acc[pid] = acc.get(pid, 0.0) + count * self._term_weight(term, tf, self.doc_len_[pid])
        ranked = sorted(acc.items(), key=lambda item: (-item[1], item[0]))
        return ranked[:k]

    def save(self, path: str | Path) -> None:
        payload = {
            "format": self.FORMAT,
            "k1": self.k1,
            "b": self.b,
            "doc_len": self.doc_len_,
            "postings": {t: [[pid, tf] for pid, tf in plist] for t, plist in self.postings_.items()},
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, ensure_ascii=False, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "Bm25Index":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != cls.FORMAT:
            raise ValueError(f"unsupported index format: {payload.get('format')!r}")
        index = cls(k1=payload["k1"], b=payload["b"])
        index.postings_ = {
            t: [(pid, tf) for pid, tf in plist] for t, plist in payload["postings"].items()
        }
        index.doc_len_ = dict(payload["doc_len"])
        index.n_passages_ = len(index.doc_len_)
        index.avgdl_ = sum(index.doc_len_.values()) / len(index.doc_len_)
        return index


def build_index(passages: Iterable[Passage], k1: float = 1.2, b: float = 0.75) -> Bm25Index:
    return Bm25Index(k1=k1, b=b).fit(passages)


def expand_query(ctx: ClaimContext, m: int, background: Bm25Index) -> list[str]:
    """Top-m salient tokens from the wider context, ranked by tf*idf.

    Candidates come from the preceding text and the section path; idf is taken
    from the background index.  Ties break lexicographically, so the result is
    deterministic.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return []
    counts: dict[str, int] = {}
    for t in tokenize(ctx.preceding_text) + tokenize(ctx.section_path):
        counts[t] = counts.get(t, 0) + 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1] * background.idf(item[0]), item[0]))
    return [t for t, _ in ranked[:m]]
