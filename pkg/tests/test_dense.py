"""Hashed encoder, contrastive training gradients, and exact knn search."""

import numpy as np
import pytest

from citecheck.dense import (
    DimensionMismatchError,
    FeatureHashEncoder,
    VectorIndex,
    build_vector_index,
    knn_search,
)
from citecheck.corpus import Document, chunk_document


def passages_from_texts(texts):
    out = []
    for i, text in enumerate(texts):
        doc = Document(url=f"https://example.com/d{i}", title=f"d{i}", text=text)
        out.extend(chunk_document(doc, window_words=500, stride_words=500))
    return out


def fitted_encoder(texts, d_in=64, d_out=16, seed=0, **kwargs):
    enc = FeatureHashEncoder(d_in=d_in, d_out=d_out, seed=seed, **kwargs)
    return enc.fit(passages_from_texts(texts))


def find_collision_free_seed(texts, d_in):
    """Seed under which all tokens across the texts land in distinct buckets."""
    from citecheck.sparse import tokenize

    tokens = sorted({t for text in texts for t in tokenize(text)})
    for seed in range(500):
        enc = FeatureHashEncoder(d_in=d_in, d_out=d_in, seed=seed)
        enc.idf_table_ = {}
        enc.default_idf_ = 1.0
        buckets = [next(iter(enc.features(t))) for t in tokens]
        if len(set(buckets)) == len(tokens):
            return seed
    raise AssertionError("no collision-free seed found")


class TestEncode:
    def test_identical_texts_unit_inner_product(self):
        enc = fitted_encoder(["alpha beta gamma", "delta beta"])
        a = enc.encode("alpha beta gamma")
        b = enc.encode("alpha beta gamma")
        assert float(a @ b) == pytest.approx(1.0, abs=1e-12)
        assert abs(np.linalg.norm(a) - 1.0) <= 1e-6

    def test_empty_text_zero_vector(self):
        enc = fitted_encoder(["alpha beta"])
        assert np.array_equal(enc.encode(""), np.zeros(enc.d_out))

    def test_disjoint_buckets_identity_projection_orthogonal(self):
        texts = ["alpha beta", "gamma delta"]
        seed = find_collision_free_seed(texts, d_in=32)
        enc = FeatureHashEncoder(d_in=32, d_out=32, seed=seed)
        enc.fit(passages_from_texts(texts))
        enc.projection_ = np.eye(32)
        a, b = enc.encode(texts[0]), enc.encode(texts[1])
        assert float(a @ b) == 0.0

    def test_tf_scale_invariance(self):
        enc = fitted_encoder(["alpha beta gamma delta", "other words here"])
        text = "alpha beta gamma alpha"
        doubled = text + " " + text
        assert np.array_equal(enc.encode(text), enc.encode(doubled))

    def test_deterministic_across_instances(self):
        texts = ["alpha beta gamma", "delta epsilon"]
        a = fitted_encoder(texts, seed=9).encode("alpha delta")
        b = fitted_encoder(texts, seed=9).encode("alpha delta")
        assert np.array_equal(a, b)


class TestKnnSearch:
    def test_query_equal_to_stored(self):
        enc = fitted_encoder(["alpha beta", "gamma delta", "epsilon zeta"])
        passages = passages_from_texts(["alpha beta", "gamma delta", "epsilon zeta"])
        index = build_vector_index(enc, passages)
        q = enc.encode_passage("gamma delta")
        hits = knn_search(index, q, 2)
        assert hits[0][0] == "https://example.com/d1#p0"
        assert hits[0][1] == pytest.approx(1.0, abs=1e-12)

    def test_k_at_least_corpus_gives_full_ranking(self):
        enc = fitted_encoder(["a b", "c d", "e f"])
        index = build_vector_index(enc, passages_from_texts(["a b", "c d", "e f"]))
        assert len(knn_search(index, enc.encode("a"), 10)) == 3

    def test_empty_index(self):
        enc = fitted_encoder(["a"])
        index = build_vector_index(enc, [])
        assert knn_search(index, enc.encode("a"), 3) == []

    def test_dimension_mismatch(self):
        enc = fitted_encoder(["a b"])
        index = build_vector_index(enc, passages_from_texts(["a b"]))
        with pytest.raises(DimensionMismatchError):
            knn_search(index, np.zeros(enc.d_out + 1), 1)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(15):
            n = int(rng.integers(1, 60))
            d = int(rng.integers(2, 24))
            matrix = rng.normal(size=(n, d))
            ids = [f"https://x.example.com/{i}#p0" for i in range(n)]
            index = VectorIndex(ids, matrix)
            q = rng.normal(size=d)
            k = int(rng.integers(1, n + 1))
            # Oracle: plain python inner products, sorted by (-score, id).
            scored = [
                (ids[i], sum(float(a) * float(b) for a, b in zip(matrix[i], q)))
                for i in range(n)
            ]
            scored.sort(key=lambda item: (-item[1], item[0]))
            got = knn_search(index, q, k)
            assert [pid for pid, _ in got] == [pid for pid, _ in scored[:k]]

    def test_duplicate_rows_tie_by_id(self):
        matrix = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        ids = ["https://x.example.com/b#p0", "https://x.example.com/a#p0", "https://x.example.com/c#p0"]
        hits = knn_search(VectorIndex(ids, matrix), np.array([1.0, 0.0]), 3)
        assert [pid for pid, _ in hits][:2] == [
            "https://x.example.com/a#p0",
            "https://x.example.com/b#p0",
        ]


class TestTraining:
    def test_batch_of_one_loss_zero(self):
        enc = fitted_encoder(["alpha beta", "gamma"])
        loss, grad_q, grad_p = enc.batch_loss_and_grad([("alpha beta", "alpha beta")])
        assert loss == 0.0
        assert all(np.allclose(g, 0) for g in grad_q.values())
        assert all(np.allclose(g, 0) for g in grad_p.values())

    def test_hand_evaluated_softmax_loss(self):
        # Identity projection and bucket-disjoint texts give inner products
        # 1 on the diagonal and 0 off it; tau = 0.5 scales scores to 2 and 0.
        # Hand evaluation: loss = -ln(e^2 / (e^2 + 1)) per row.
        texts = ["alpha beta", "gamma delta"]
        seed = find_collision_free_seed(texts, d_in=32)
        enc = FeatureHashEncoder(d_in=32, d_out=32, seed=seed, tau=0.5)
        enc.fit(passages_from_texts(texts))
        enc.projection_ = np.eye(32)
        pairs = [(texts[0], texts[0]), (texts[1], texts[1])]
        loss, _, _ = enc.batch_loss_and_grad(pairs)
        assert loss == pytest.approx(0.12692801104297252, abs=1e-12)

    def test_analytic_gradient_matches_finite_differences(self):
        corpus = [
            "ruby spire over the old bridge",
            "the committee met in the spring",
            "a long railway crossed the valley",
        ]
        enc = fitted_encoder(corpus, d_in=24, d_out=6, seed=2)
        pairs = [
            ("ruby spire bridge", "ruby spire over the old bridge"),
            ("committee spring", "the committee met in the spring"),
            ("railway valley", "a long railway crossed the valley"),
        ]
        loss, grad_q, grad_p = enc.batch_loss_and_grad(pairs)
        analytic = np.zeros_like(enc.projection_)
        for bucket, g in grad_q.items():
            analytic[bucket] += g
        for bucket, g in grad_p.items():
            analytic[bucket] += g

        h = 1e-6
        numeric = np.zeros_like(analytic)
        for r in range(enc.d_in):
            for c in range(enc.d_out):
                orig = enc.projection_[r, c]
                enc.projection_[r, c] = orig + h
                up, _, _ = enc.batch_loss_and_grad(pairs)
                enc.projection_[r, c] = orig - h
                down, _, _ = enc.batch_loss_and_grad(pairs)
                enc.projection_[r, c] = orig
                numeric[r, c] = (up - down) / (2 * h)
        rel = np.linalg.norm(numeric - analytic) / np.linalg.norm(analytic)
        assert rel < 1e-4

    def test_loss_non_increasing_over_ten_steps(self):
        corpus = ["alpha beta news", "gamma delta report", "epsilon zeta story", "eta theta note"]
        enc = fitted_encoder(corpus, d_in=48, d_out=8, seed=4)
        pairs = [
            ("alpha beta", "alpha beta news"),
            ("gamma delta", "gamma delta report"),
            ("epsilon zeta", "epsilon zeta story"),
            ("eta theta", "eta theta note"),
        ]
        lr = 1e-2
        losses = []
        for _ in range(10):
            loss, grad_q, grad_p = enc.batch_loss_and_grad(pairs)
            losses.append(loss)
            for bucket, g in grad_q.items():
                enc.projection_[bucket] -= lr * g
            for bucket, g in grad_p.items():
                enc.projection_[bucket] -= lr * g
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))
        assert all(l >= 0 for l in losses)

    def test_softmax_rows_sum_to_one(self):
        enc = fitted_encoder(["a b c", "d e f", "g h"], d_in=32, d_out=8)
        pairs = [("a b", "a b c"), ("d e", "d e f"), ("g", "g h")]
        q = np.array([enc.encode(t) for t, _ in pairs])
        p = np.array([enc.encode_passage(t) for _, t in pairs])
        scores = q @ p.T / enc.tau
        exp = np.exp(scores - scores.max(axis=1, keepdims=True))
        softmax = exp / exp.sum(axis=1, keepdims=True)
        assert np.allclose(softmax.sum(axis=1), 1.0, atol=1e-9)

    def test_fit_pairs_runs_and_is_deterministic(self):
        corpus = ["alpha beta news", "gamma delta report", "epsilon zeta story"]
        pairs = [
            ("alpha beta", "alpha beta news"),
            ("gamma delta", "gamma delta report"),
            ("epsilon zeta", "epsilon zeta story"),
        ]
        a = fitted_encoder(corpus, d_in=48, d_out=8, seed=5).fit_pairs(pairs, batch_size=2, epochs=2)
        b = fitted_encoder(corpus, d_in=48, d_out=8, seed=5).fit_pairs(pairs, batch_size=2, epochs=2)
        assert np.array_equal(a.projection_, b.projection_)
        assert a.training_loss_ == b.training_loss_


class TestVectorIndexBuild:
    def test_lookup_own_embedding_bit_exact(self):
        texts = ["alpha beta", "gamma delta"]
        enc = fitted_encoder(texts)
        passages = passages_from_texts(texts)
        index = build_vector_index(enc, passages)
        i = index.passage_ids.index(passages[0].passage_id)
        assert np.array_equal(index.matrix[i], enc.encode_passage(passages[0].text))

    def test_same_seed_reproduces_index(self):
        texts = ["alpha beta", "gamma delta"]
        passages = passages_from_texts(texts)
        a = build_vector_index(fitted_encoder(texts, seed=11), passages)
        b = build_vector_index(fitted_encoder(texts, seed=11), passages)
        assert a.passage_ids == b.passage_ids
        assert np.array_equal(a.matrix, b.matrix)

    def test_unique_ids_required(self):
        with pytest.raises(ValueError):
            VectorIndex(["x", "x"], np.zeros((2, 4)))


class TestPersistence:
    def test_encoder_round_trip(self, tmp_path):
        enc = fitted_encoder(["alpha beta news", "gamma delta"], d_in=32, d_out=8, seed=3)
        enc.fit_pairs([("alpha", "alpha beta news")], batch_size=1, epochs=1)
        path = tmp_path / "enc.bin"
        enc.save(path)
        loaded = FeatureHashEncoder.load(path)
        assert loaded.get_params()["d_in"] == enc.d_in
        assert loaded.idf_table_ == enc.idf_table_
        assert np.array_equal(loaded.projection_, enc.projection_)
        assert np.array_equal(loaded.encode("alpha beta"), enc.encode("alpha beta"))

    def test_two_tower_round_trip(self, tmp_path):
        enc = FeatureHashEncoder(d_in=32, d_out=8, seed=3, shared_weights=False)
        enc.fit(passages_from_texts(["alpha beta", "gamma"]))
        path = tmp_path / "enc2.bin"
        enc.save(path)
        loaded = FeatureHashEncoder.load(path)
        assert np.array_equal(loaded.projection_passage_, enc.projection_passage_)
        assert not np.array_equal(loaded.projection_, loaded.projection_passage_)

    def test_vector_index_round_trip(self, tmp_path):
        enc = fitted_encoder(["alpha beta", "gamma delta"])
        index = build_vector_index(enc, passages_from_texts(["alpha beta", "gamma delta"]))
        path = tmp_path / "vec.bin"
        index.save(path)
        loaded = VectorIndex.load(path)
        assert loaded.passage_ids == index.passage_ids
        assert np.array_equal(loaded.matrix, index.matrix)
