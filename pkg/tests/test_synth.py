"""Synthetic corpus generator: determinism and structural guarantees."""

from citecheck.corpus import CitationInstance, Document, read_jsonl
from citecheck.evaluation import url_depth
from citecheck.synth import generate_corpus, write_dataset


def test_deterministic_for_seed():
    a = generate_corpus(seed=5, n_claims=10, n_failed=2, n_topics=2, n_topic_distractors=4)
    b = generate_corpus(seed=5, n_claims=10, n_failed=2, n_topics=2, n_topic_distractors=4)
    assert a.documents == b.documents
    assert a.instances == b.instances


def test_different_seeds_differ():
    a = generate_corpus(seed=5, n_claims=10, n_failed=2, n_topics=2, n_topic_distractors=4)
    b = generate_corpus(seed=6, n_claims=10, n_failed=2, n_topics=2, n_topic_distractors=4)
    assert a.documents != b.documents


def test_every_citation_resolves_to_a_document():
    data = generate_corpus(seed=5, n_claims=15, n_failed=3, n_topics=3, n_topic_distractors=6)
    urls = {d.url for d in data.documents}
    assert all(inst.cited_url in urls for inst in data.instances)
    assert len(urls) == len(data.documents)  # no duplicate documents


def test_failed_citations_are_shallow_and_set_aside():
    data = generate_corpus(seed=7)
    failed = [i for i in data.instances if i.failed_verification]
    assert len(failed) == 20
    assert all(not i.featured for i in failed)
    assert all(url_depth(i.cited_url) <= 2 for i in failed)
    featured_depths = {url_depth(i.cited_url) for i in data.instances if i.featured}
    assert featured_depths & {0, 1}  # some shallow featured URLs exist
    assert featured_depths & {3, 4}  # and plenty of deep ones


def test_gold_evidence_paraphrases_claim():
    from citecheck.corpus import PassageStore, extract_claim_context
    from citecheck.verifier import extract_features

    data = generate_corpus(seed=7, n_claims=20, n_failed=2, n_topics=4, n_topic_distractors=8)
    store = PassageStore(data.documents)
    for inst in data.instances:
        if inst.failed_verification:
            continue
        ctx = extract_claim_context(inst)
        best = max(
            extract_features(ctx, p.text)[1]  # claim coverage
            for p in store.passages_for(inst.cited_url)
        )
        assert best >= 0.5


def test_write_dataset_round_trip(tmp_path):
    data = generate_corpus(seed=5, n_claims=8, n_failed=2, n_topics=2, n_topic_distractors=4)
    doc_path, inst_path = write_dataset(tmp_path, data)
    assert read_jsonl(doc_path, Document) == data.documents
    assert read_jsonl(inst_path, CitationInstance) == data.instances
