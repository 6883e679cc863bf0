"""Documents, passages, claim contexts, and citation instances.

Everything downstream (indexing, scoring, evaluation) operates on the types
defined here.  A document is plain text addressed by a URL; passages are
fixed-size word windows over it; a citation instance ties a claim inside an
article to the URL it cites.  A "word" is a maximal non-whitespace run, which
fixes all window arithmetic.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable
from urllib.parse import urlparse

CITATION_MARKER = "[CIT]"

# Sentence boundary: terminal punctuation followed by whitespace.
_SENTENCE_END = re.compile(r"[.!?](?=\s)")


class ParseError(ValueError):
    """A JSONL line could not be turned into a record."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NoClaimError(ValueError):
    """No non-whitespace text precedes the citation marker."""


@dataclass(frozen=True)
class Document:
    """A web source: absolute URL, title, and plain text."""

    url: str
    title: str
    text: str
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.url:
            raise ValueError("field 'url' must be non-empty")
        parts = urlparse(self.url)
        if not parts.scheme or not parts.netloc:
            raise ValueError(f"field 'url' is not an absolute URL: {self.url!r}")

    def words(self) -> list[str]:
        return self.text.split()

    def to_json_dict(self) -> dict:
        return {**self.extras, "url": self.url, "title": self.title, "text": self.text}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Document":
        known = ("url", "title", "text")
        for key in known:
            if key not in obj:
                raise ValueError(f"missing field {key!r}")
        extras = {k: v for k, v in obj.items() if k not in known}
        return cls(url=obj["url"], title=obj["title"], text=obj["text"], extras=extras)


@dataclass(frozen=True)
class Passage:
    """One fixed-size word window of a document; the unit of retrieval."""

    doc_url: str
    index: int
    word_start: int
    word_end: int
    text: str

    @property
    def passage_id(self) -> str:
        return f"{self.doc_url}#p{self.index}"

    @property
    def word_span(self) -> tuple[int, int]:
        return (self.word_start, self.word_end)


@dataclass(frozen=True)
class ClaimContext:
    """The claim sentence plus the surrounding material used to query for it."""

    article_title: str
    section_path: str
    claim_sentence: str
    preceding_text: str = ""


@dataclass(frozen=True)
class CitationInstance:
    """One claim-citation record: article metadata, marked context, cited source."""

    instance_id: str
    article_title: str
    section_path: str
    context_with_marker: str
    cited_url: str
    cited_title: str = ""
    featured: bool = False
    failed_verification: bool = False
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.context_with_marker.count(CITATION_MARKER) != 1:
            raise ValueError(
                f"field 'context_with_marker' must contain exactly one {CITATION_MARKER!r}"
            )
        if not self.cited_url:
            raise ValueError("field 'cited_url' must be non-empty")

    def to_json_dict(self) -> dict:
        return {
            **self.extras,
            "instance_id": self.instance_id,
            "article_title": self.article_title,
            "section_path": self.section_path,
            "context_with_marker": self.context_with_marker,
            "cited_url": self.cited_url,
            "cited_title": self.cited_title,
            "featured": self.featured,
            "failed_verification": self.failed_verification,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "CitationInstance":
        required = ("instance_id", "article_title", "context_with_marker", "cited_url")
        for key in required:
            if key not in obj:
                raise ValueError(f"missing field {key!r}")
        known = required + ("section_path", "cited_title", "featured", "failed_verification")
        extras = {k: v for k, v in obj.items() if k not in known}
        return cls(
            instance_id=obj["instance_id"],
            article_title=obj["article_title"],
            section_path=obj.get("section_path", ""),
            context_with_marker=obj["context_with_marker"],
            cited_url=obj["cited_url"],
            cited_title=obj.get("cited_title", ""),
            featured=bool(obj.get("featured", False)),
            failed_verification=bool(obj.get("failed_verification", False)),
            extras=extras,
        )


@dataclass
class DatasetSplit:
    name: str
    instance_ids: set[str]


SPLIT_NAMES = ("train", "dev", "test", "fail-dev", "fail-test")


def chunk_document(doc: Document, window_words: int = 100, stride_words: int = 100) -> list[Passage]:
    """Split a document into word windows starting at 0, stride, 2*stride, ...

    The last window may be shorter than ``window_words``.  Every word of the
    document is covered by at least one window; with ``stride == window`` the
    windows tile the document exactly.  An empty document yields no passages.
    """
    if window_words < 1 or stride_words < 1:
        raise ValueError("window_words and stride_words must be positive")
    if stride_words > window_words:
        raise ValueError("stride_words must not exceed window_words")
    words = doc.words()
    passages = []
    for i, start in enumerate(range(0, len(words), stride_words)):
        chunk = words[start : start + window_words]
        passages.append(
            Passage(
                doc_url=doc.url,
                index=i,
                word_start=start,
                word_end=start + len(chunk),
                text=" ".join(chunk),
            )
        )
    return passages


def extract_claim_context(inst: CitationInstance) -> ClaimContext:
    """Pull the claim sentence out of the marked context.

    The claim is the last sentence strictly before the citation marker, where
    sentences end at '.', '!' or '?' followed by whitespace.  Everything before
    that sentence becomes ``preceding_text``.

    Raises:
        NoClaimError: nothing but whitespace precedes the marker.
    """
    before = inst.context_with_marker.split(CITATION_MARKER, 1)[0]
    if not before.strip():
        raise NoClaimError(f"no text precedes {CITATION_MARKER!r} in {inst.instance_id!r}")
    cut = 0
    for match in _SENTENCE_END.finditer(before):
        if before[match.end() :].strip():
            cut = match.end()
    return ClaimContext(
        article_title=inst.article_title,
        section_path=inst.section_path,
        claim_sentence=before[cut:].strip(),
        preceding_text=before[:cut].strip(),
    )


def _unit_hash(article_title: str, seed: int) -> float:
    digest = hashlib.sha256(f"{seed}\x1f{article_title}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def split_by_article(
    instances: Iterable[CitationInstance],
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> list[DatasetSplit]:
    """Assign instances to train/dev/test at the article level.

    The split is a deterministic function of (article_title, seed), so all
    instances of one article land in the same split and reruns reproduce the
    same assignment.  Instances flagged as failed verification never enter
    train/dev/test; they are set aside into fail-dev / fail-test (hashed
    half-and-half, also by article).
    """
    r_train, r_dev, r_test = ratios
    if min(ratios) <= 0:
        raise ValueError("ratios must be positive")
    if abs(r_train + r_dev + r_test - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    buckets: dict[str, set[str]] = {name: set() for name in SPLIT_NAMES}
    for inst in instances:
        u = _unit_hash(inst.article_title, seed)
        if inst.failed_verification:
            name = "fail-dev" if u < 0.5 else "fail-test"
        elif u < r_train:
            name = "train"
        elif u < r_train + r_dev:
            name = "dev"
        else:
            name = "test"
        buckets[name].add(inst.instance_id)
    return [DatasetSplit(name, buckets[name]) for name in SPLIT_NAMES]


def read_jsonl(path: str | Path, cls) -> list:
    """Read one record per line; unknown fields are preserved in ``extras``.

    Raises:
        ParseError: malformed JSON or a missing/invalid field, with the
            1-based line number.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ParseError(line_no, "expected a JSON object")
            try:
                records.append(cls.from_json_dict(obj))
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from exc
    return records


def write_jsonl(path: str | Path, records: Iterable) -> None:
    """Write one record per line (UTF-8, LF), carrying ``extras`` through."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


class PassageStore:
    """Chunked passages for a document collection, addressable by id or URL."""

    def __init__(self, documents: Iterable[Document], window_words: int = 100, stride_words: int = 100):
        self.window_words = window_words
        self.stride_words = stride_words
        self.documents: dict[str, Document] = {}
        self._by_doc: dict[str, list[Passage]] = {}
        self._by_id: dict[str, Passage] = {}
        for doc in documents:
            if doc.url in self.documents:
                raise ValueError(f"duplicate document url: {doc.url!r}")
            self.documents[doc.url] = doc
            passages = chunk_document(doc, window_words, stride_words)
            self._by_doc[doc.url] = passages
            for p in passages:
                self._by_id[p.passage_id] = p

    def passages_for(self, doc_url: str) -> list[Passage]:
        return self._by_doc.get(doc_url, [])

    def get(self, passage_id: str) -> Passage:
        return self._by_id[passage_id]

    def doc_url_of(self, passage_id: str) -> str:
        return self._by_id[passage_id].doc_url

    def __iter__(self):
        for passages in self._by_doc.values():
            yield from passages

    def __len__(self) -> int:
        return len(self._by_id)
