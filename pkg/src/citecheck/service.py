"""Review service: a claim queue ordered by verifier score, blind A/B claim
views, durable annotation recording, and live agreement statistics.

Reviewers see two citation panes per claim, labeled A and B, with the
existing citation's side chosen by a keyed hash of (server seed, claim id):
stable across requests for one claim, unpredictable across claims, and never
revealed in any payload.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .corpus import extract_claim_context
from .evaluation import bucket_by_score, fleiss_kappa, majority_vote, sign_test
from .pipeline import Pipeline

EVIDENCE_LEVELS = ("enough", "partial", "no_evidence")

DEFAULT_BUCKET_EDGES = (-1.0, 0.0, 1.0, 2.0)


class DuplicateAnnotationError(ValueError):
    """This (claim, annotator) pair already has a recorded annotation."""


@dataclass(frozen=True)
class CitationPane:
    title: str
    selected_passage: str
    full_text: str


@dataclass(frozen=True)
class ReviewItem:
    """One claim prepared for blind review."""

    instance_id: str
    article_title: str
    section_path: str
    claim_sentence: str
    preceding_text: str
    original_score: float
    flagged: bool
    original: CitationPane
    suggested: CitationPane


@dataclass(frozen=True)
class AnnotationRecord:
    item_id: str
    annotator_id: str
    preference: str  # side label: A, B, or none
    evidence: dict[str, str]

    def to_json_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "annotator_id": self.annotator_id,
            "preference": self.preference,
            "evidence": dict(self.evidence),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "AnnotationRecord":
        return cls(
            item_id=obj["item_id"],
            annotator_id=obj["annotator_id"],
            preference=obj["preference"],
            evidence=dict(obj.get("evidence", {})),
        )


class AnnotationStore:
    """Append-only JSONL store, fsynced per write; one record per (claim, annotator)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.records: list[AnnotationRecord] = []
        self._keys: set[tuple[str, str]] = set()
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = AnnotationRecord.from_json_dict(json.loads(line))
                        self.records.append(rec)
                        self._keys.add((rec.item_id, rec.annotator_id))

    def append(self, record: AnnotationRecord) -> None:
        with self._lock:
            key = (record.item_id, record.annotator_id)
            if key in self._keys:
                raise DuplicateAnnotationError(f"duplicate annotation for {key}")
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.records.append(record)
            self._keys.add(key)

    def count_for(self, item_id: str) -> int:
        return sum(1 for r in self.records if r.item_id == item_id)


def original_side(seed: int, item_id: str) -> str:
    """Which pane (A or B) shows the existing citation for this claim."""
    key = seed.to_bytes(8, "big", signed=True)
    digest = hashlib.blake2b(item_id.encode("utf-8"), digest_size=8, key=key).digest()
    return "A" if digest[0] & 1 else "B"


def build_review_items(pipe: Pipeline, instances: Iterable = None) -> list[ReviewItem]:
    """Score every reviewable claim and prepare its two citation panes.

    The suggested pane holds the best-scoring retrieved document other than
    the cited one; claims for which retrieval returns no such document are
    skipped (nothing to compare against).
    """
    if pipe.scorer is None:
        raise RuntimeError("no trained scorer; run train first")
    items = []
    for inst in instances if instances is not None else pipe.instances:
        ctx = extract_claim_context(inst)
        original_doc = pipe.store.documents.get(inst.cited_url)
        if original_doc is None:
            continue
        candidates = pipe.retrieve_candidates(ctx)
        ranked, _ = pipe.scorer.rerank(ctx, candidates, original_doc, pipe.store)
        original_result = next(r for r in ranked if r.doc_url == inst.cited_url)
        suggestion = next((r for r in ranked if r.doc_url != inst.cited_url), None)
        if suggestion is None:
            continue
        suggested_doc = pipe.store.documents[suggestion.doc_url]
        items.append(
            ReviewItem(
                instance_id=inst.instance_id,
                article_title=inst.article_title,
                section_path=inst.section_path,
                claim_sentence=ctx.claim_sentence,
                preceding_text=ctx.preceding_text,
                original_score=original_result.score,
                flagged=original_result.flagged,
                original=CitationPane(
                    title=original_doc.title,
                    selected_passage=pipe.scorer.select_annotation_passage(
                        ctx, original_doc, pipe.config.window_words
                    ).text,
                    full_text=original_doc.text,
                ),
                suggested=CitationPane(
                    title=suggested_doc.title,
                    selected_passage=pipe.scorer.select_annotation_passage(
                        ctx, suggested_doc, pipe.config.window_words
                    ).text,
                    full_text=suggested_doc.text,
                ),
            )
        )
    return items


class AnnotationBody(BaseModel):
    annotator_id: str = Field(min_length=1)
    preference: Literal["A", "B", "none"]
    evidence: dict[Literal["A", "B"], Literal["enough", "partial", "no_evidence"]] = Field(
        default_factory=dict
    )


def create_app(
    items: Sequence[ReviewItem],
    store: AnnotationStore,
    seed: int,
    bucket_edges: Sequence[float] = DEFAULT_BUCKET_EDGES,
) -> FastAPI:
    app = FastAPI(title="citecheck review service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    by_id = {item.instance_id: item for item in items}
    queue = sorted(items, key=lambda it: (it.original_score, it.instance_id))

    def role_of(record: AnnotationRecord) -> str:
        """Map a side preference back to original/suggested/none."""
        if record.preference == "none":
            return "none"
        side = original_side(seed, record.item_id)
        return "original" if record.preference == side else "suggested"

    @app.get("/queue")
    def get_queue() -> dict:
        return {
            "entries": [
                {
                    "instance_id": it.instance_id,
                    "claim_preview": it.claim_sentence[:160],
                    "original_score": it.original_score,
                    "flagged": it.flagged,
                    "annotation_count": store.count_for(it.instance_id),
                }
                for it in queue
            ]
        }

    @app.get("/claims/{item_id}")
    def get_claim(item_id: str) -> dict:
        item = by_id.get(item_id)
        if item is None:
            raise HTTPException(status_code=404, detail=f"unknown claim {item_id!r}")
        side = original_side(seed, item_id)
        panes = {side: item.original, ("B" if side == "A" else "A"): item.suggested}
        return {
            "instance_id": item.instance_id,
            "article_title": item.article_title,
            "section_path": item.section_path,
            "claim": item.claim_sentence,
            "context": item.preceding_text,
            "panes": [
                {
                    "label": label,
                    "title": panes[label].title,
                    "selected_passage": panes[label].selected_passage,
                    "full_text": panes[label].full_text,
                }
                for label in ("A", "B")
            ],
        }

    @app.post("/claims/{item_id}/annotations", status_code=201)
    def post_annotation(item_id: str, body: AnnotationBody) -> dict:
        if item_id not in by_id:
            raise HTTPException(status_code=404, detail=f"unknown claim {item_id!r}")
        record = AnnotationRecord(
            item_id=item_id,
            annotator_id=body.annotator_id,
            preference=body.preference,
            evidence=dict(body.evidence),
        )
        try:
            store.append(record)
        except DuplicateAnnotationError:
            raise HTTPException(
                status_code=409,
                detail=f"annotator {body.annotator_id!r} already annotated {item_id!r}",
            )
        return {"status": "recorded", "annotation_count": store.count_for(item_id)}

    @app.get("/stats")
    def get_stats() -> dict:
        records = store.records
        n = len(records)
        roles = [role_of(r) for r in records]
        shares = {
            role: (roles.count(role) / n if n else 0.0)
            for role in ("original", "suggested", "none")
        }

        by_item: dict[str, list[str]] = {}
        for record, role in zip(records, roles):
            by_item.setdefault(record.item_id, []).append(role)
        majority_counts = {"original": 0, "suggested": 0, "none": 0, "no_majority": 0}
        for votes in by_item.values():
            winner = majority_vote(votes)
            majority_counts["no_majority" if winner is None else winner] += 1

        kappa = _kappa_over_uniform_subset(by_item)

        wins_suggested = roles.count("suggested")
        wins_original = roles.count("original")
        if wins_suggested + wins_original > 0:
            one_tail, two_tail = sign_test(wins_suggested, wins_original)
        else:
            one_tail = two_tail = None

        scored = [(it.instance_id, it.original_score) for it in queue]
        buckets = bucket_by_score(scored, bucket_edges)
        bounds = [None, *bucket_edges, None]
        bucket_rows = []
        for i, bucket in enumerate(buckets):
            ids = {item_id for item_id, _ in bucket}
            bucket_roles = [role for record, role in zip(records, roles) if record.item_id in ids]
            bucket_rows.append(
                {
                    "lo": bounds[i],
                    "hi": bounds[i + 1],
                    "n_claims": len(bucket),
                    "n_annotations": len(bucket_roles),
                    "preferences": {
                        role: bucket_roles.count(role) for role in ("original", "suggested", "none")
                    },
                }
            )

        return {
            "n_annotations": n,
            "n_claims_annotated": len(by_item),
            "preference_shares": shares,
            "majority": majority_counts,
            "fleiss_kappa": kappa,
            "sign_test": {
                "wins_suggested": wins_suggested,
                "wins_original": wins_original,
                "one_tail_p": one_tail,
                "two_tail_p": two_tail,
            },
            "buckets": bucket_rows,
        }

    return app


def _kappa_over_uniform_subset(by_item: dict[str, list[str]]) -> float | None:
    """Fleiss' kappa needs a constant rater count; use the largest uniform subset.

    Items are grouped by their annotation count (>= 2); the most populous
    group (ties to the larger count) feeds the kappa computation.  Returns
    None when no group exists or agreement is degenerate.
    """
    groups: dict[int, list[list[str]]] = {}
    for votes in by_item.values():
        if len(votes) >= 2:
            groups.setdefault(len(votes), []).append(votes)
    if not groups:
        return None
    count = max(groups, key=lambda c: (len(groups[c]), c))
    categories = ("original", "suggested", "none")
    table = [[votes.count(cat) for cat in categories] for votes in groups[count]]
    try:
        return fleiss_kappa(table)
    except ValueError:
        return None
