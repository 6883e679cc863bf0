"""HTTP review service: queue ordering, blind A/B views, durable annotations,
and restart-stable statistics."""

import json

import pytest
from fastapi.testclient import TestClient

from citecheck.service import (
    AnnotationRecord,
    AnnotationStore,
    CitationPane,
    DuplicateAnnotationError,
    ReviewItem,
    create_app,
    original_side,
)

SEED = 99


def make_item(item_id: str, score: float, flagged: bool = False) -> ReviewItem:
    return ReviewItem(
        instance_id=item_id,
        article_title=f"Article {item_id}",
        section_path="Events",
        claim_sentence=f"Claim sentence for {item_id}.",
        preceding_text="Context before.",
        original_score=score,
        flagged=flagged,
        original=CitationPane(
            title=f"first pane {item_id}",
            selected_passage=f"first passage {item_id}",
            full_text=f"first full text {item_id}",
        ),
        suggested=CitationPane(
            title=f"second pane {item_id}",
            selected_passage=f"second passage {item_id}",
            full_text=f"second full text {item_id}",
        ),
    )


@pytest.fixture
def items():
    return [
        make_item("c-low", -3.0, flagged=True),
        make_item("c-mid", 0.5),
        make_item("c-high", 2.0),
    ]


@pytest.fixture
def client(items, tmp_path):
    store = AnnotationStore(tmp_path / "annotations.jsonl")
    app = create_app(items, store, seed=SEED)
    return TestClient(app)


def annotate(client, item_id, annotator, preference, evidence=None):
    body = {"annotator_id": annotator, "preference": preference}
    if evidence:
        body["evidence"] = evidence
    return client.post(f"/claims/{item_id}/annotations", json=body)


class TestQueue:
    def test_sorted_ascending_by_score(self, client):
        entries = client.get("/queue").json()["entries"]
        assert [e["instance_id"] for e in entries] == ["c-low", "c-mid", "c-high"]
        scores = [e["original_score"] for e in entries]
        assert scores == sorted(scores)

    def test_flagged_negative_score_claim_marked(self, client):
        entries = client.get("/queue").json()["entries"]
        low = next(e for e in entries if e["instance_id"] == "c-low")
        assert low["original_score"] == -3.0
        assert low["flagged"] is True

    def test_annotation_count_updates(self, client):
        annotate(client, "c-low", "ann1", "A")
        entries = client.get("/queue").json()["entries"]
        low = next(e for e in entries if e["instance_id"] == "c-low")
        assert low["annotation_count"] == 1


class TestClaimView:
    def test_unknown_claim_404(self, client):
        assert client.get("/claims/nope").status_code == 404

    def test_panes_carry_passage_and_full_text(self, client):
        payload = client.get("/claims/c-mid").json()
        assert payload["claim"] == "Claim sentence for c-mid."
        labels = [p["label"] for p in payload["panes"]]
        assert labels == ["A", "B"]
        for pane in payload["panes"]:
            assert pane["selected_passage"]
            assert pane["full_text"]

    def test_blindness_no_identifying_field(self, client):
        payload = client.get("/claims/c-mid").json()
        raw = json.dumps(payload).lower()
        for marker in ("original", "suggested", "existing", "source", "cited"):
            assert marker not in raw
        keys_a, keys_b = (set(p) for p in payload["panes"])
        assert keys_a == keys_b == {"label", "title", "selected_passage", "full_text"}

    def test_side_assignment_stable_per_claim(self, client):
        first = client.get("/claims/c-mid").json()
        second = client.get("/claims/c-mid").json()
        assert first == second

    def test_side_assignment_varies_across_claims(self):
        sides = {original_side(SEED, f"claim-{i}") for i in range(64)}
        assert sides == {"A", "B"}


class TestAnnotate:
    def test_recorded(self, client):
        resp = annotate(client, "c-low", "ann1", "A", evidence={"A": "enough"})
        assert resp.status_code == 201
        assert resp.json()["annotation_count"] == 1

    def test_duplicate_409_and_store_unchanged(self, client):
        assert annotate(client, "c-low", "ann1", "A").status_code == 201
        assert annotate(client, "c-low", "ann1", "B").status_code == 409
        assert client.get("/stats").json()["n_annotations"] == 1

    def test_same_annotator_different_claims_ok(self, client):
        assert annotate(client, "c-low", "ann1", "A").status_code == 201
        assert annotate(client, "c-mid", "ann1", "B").status_code == 201

    def test_unknown_claim_404(self, client):
        assert annotate(client, "ghost", "ann1", "A").status_code == 404

    def test_invalid_body_422(self, client):
        assert annotate(client, "c-low", "ann1", "C").status_code == 422
        assert annotate(client, "c-low", "", "A").status_code == 422
        resp = client.post("/claims/c-low/annotations", json={"preference": "A"})
        assert resp.status_code == 422
        assert annotate(client, "c-low", "a", "A", evidence={"A": "plenty"}).status_code == 422


class TestStats:
    def test_majority_and_shares(self, client, items):
        # Five annotators on one claim: 3 prefer the original's side, one the
        # other side, one neither.
        side = original_side(SEED, "c-low")
        other = "B" if side == "A" else "A"
        for i, pref in enumerate([side, side, side, other, "none"]):
            assert annotate(client, "c-low", f"ann{i}", pref).status_code == 201
        stats = client.get("/stats").json()
        assert stats["n_annotations"] == 5
        assert stats["majority"]["original"] == 1
        assert stats["preference_shares"]["original"] == pytest.approx(0.6)
        assert stats["preference_shares"]["suggested"] == pytest.approx(0.2)
        assert stats["preference_shares"]["none"] == pytest.approx(0.2)
        assert stats["sign_test"]["wins_original"] == 3
        assert stats["sign_test"]["wins_suggested"] == 1

    def test_no_majority_counted(self, client):
        for i, pref in enumerate(["A", "A", "B", "B"]):
            annotate(client, "c-mid", f"ann{i}", pref)
        stats = client.get("/stats").json()
        assert stats["majority"]["no_majority"] == 1

    def test_empty_store(self, client):
        stats = client.get("/stats").json()
        assert stats["n_annotations"] == 0
        assert stats["fleiss_kappa"] is None
        assert stats["sign_test"]["one_tail_p"] is None

    def test_buckets_cover_scores(self, client):
        stats = client.get("/stats").json()
        assert sum(b["n_claims"] for b in stats["buckets"]) == 3
        assert stats["buckets"][0]["lo"] is None
        assert stats["buckets"][-1]["hi"] is None

    def test_restart_reproduces_stats(self, items, tmp_path):
        path = tmp_path / "annotations.jsonl"
        store = AnnotationStore(path)
        client = TestClient(create_app(items, store, seed=SEED))
        for i, pref in enumerate(["A", "B", "none", "A"]):
            claim = ["c-low", "c-mid", "c-high", "c-mid"][i]
            assert annotate(client, claim, f"ann{i}", pref).status_code == 201
        before = client.get("/stats").json()

        restarted = TestClient(create_app(items, AnnotationStore(path), seed=SEED))
        after = restarted.get("/stats").json()
        assert after == before
        # Still append-only afterwards: a new annotation extends the file.
        n_lines = len(path.read_text().splitlines())
        annotate(restarted, "c-high", "late", "B")
        assert len(path.read_text().splitlines()) == n_lines + 1


class TestAnnotationStore:
    def test_duplicate_raises(self, tmp_path):
        store = AnnotationStore(tmp_path / "a.jsonl")
        record = AnnotationRecord("item", "ann", "A", {})
        store.append(record)
        with pytest.raises(DuplicateAnnotationError):
            store.append(AnnotationRecord("item", "ann", "none", {}))

    def test_reload_preserves_records(self, tmp_path):
        path = tmp_path / "a.jsonl"
        store = AnnotationStore(path)
        store.append(AnnotationRecord("item", "ann", "A", {"A": "partial"}))
        reloaded = AnnotationStore(path)
        assert reloaded.records == store.records

    def test_concurrent_appends_serialized(self, tmp_path):
        import threading

        path = tmp_path / "a.jsonl"
        store = AnnotationStore(path)

        def worker(i):
            store.append(AnnotationRecord(f"item-{i % 5}", f"ann-{i}", "A", {}))

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(40)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(store.records) == 40
        assert len(path.read_text().splitlines()) == 40
        assert len(AnnotationStore(path).records) == 40
