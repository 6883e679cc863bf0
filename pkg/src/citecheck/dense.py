"""Dense retrieval: feature-hashed text encoder, contrastive training over
in-batch negatives, and exact inner-product top-k search.

The encoder maps text to a hashed tf*idf vector, projects it through a linear
map, and L2-normalizes the result.  Only the projection is trained; hashing
and idf weights stay frozen.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import ClaimContext, Passage
from .sparse import tokenize


class DimensionMismatchError(ValueError):
    """Query embedding dimension does not match the index."""


def _term_hash(term: str, seed: int) -> bytes:
    key = seed.to_bytes(8, "big", signed=True)
    return hashlib.blake2b(term.encode("utf-8"), digest_size=16, key=key).digest()


class FeatureHashEncoder(BaseEstimator):
    """Shared-weight bi-encoder: hashed tf*idf features through a projection.

    fit() computes the idf table over a passage corpus and draws a seeded
    random sign projection (so an untrained encoder already approximates
    tf*idf cosine similarity); fit_pairs() then trains the projection to pull
    each claim toward its cited passage and away from in-batch negatives.
    """

    FORMAT = "citecheck-encoder/1"

    def __init__(
        self,
        d_in: int = 2**18,
        d_out: int = 64,
        seed: int = 0,
        tau: float = 1.0,
        shared_weights: bool = True,
        learning_rate: float = 0.1,
        epochs: int = 3,
        batch_size: int = 16,
    ):
        self.d_in = d_in
        self.d_out = d_out
        self.seed = seed
        self.tau = tau
        self.shared_weights = shared_weights
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size

    # ------------------------------------------------------------------
    # Fitting
    # ------------------------------------------------------------------

    def fit(self, passages: Iterable[Passage | str]) -> "FeatureHashEncoder":
        """Build the idf table from a corpus and initialize the projection."""
        if self.d_in < self.d_out or self.d_out < 1:
            raise ValueError("require d_in >= d_out >= 1")
        texts = [p.text if isinstance(p, Passage) else p for p in passages]
        n = len(texts)
        df: dict[str, int] = {}
        for text in texts:
            for t in set(tokenize(text)):
                df[t] = df.get(t, 0) + 1
        self.idf_table_ = {t: math.log(1 + (n - c + 0.5) / (c + 0.5)) for t, c in df.items()}
        self.default_idf_ = math.log(1 + (n + 0.5) / 0.5)
        rng = np.random.default_rng(self.seed)
        self.projection_ = self._draw_projection(rng)
        if not self.shared_weights:
            self.projection_passage_ = self._draw_projection(rng)
        return self

    def _draw_projection(self, rng: np.random.Generator) -> np.ndarray:
        signs = rng.integers(0, 2, size=(self.d_in, self.d_out), dtype=np.int8)
        return (signs.astype(np.float64) * 2.0 - 1.0) / math.sqrt(self.d_out)

    # ------------------------------------------------------------------
    # Encoding
    # ------------------------------------------------------------------

    def features(self, text: str) -> dict[int, float]:
        """Signed hashed tf*idf features as a sparse bucket -> weight map."""
        counts: dict[str, int] = {}
        for t in tokenize(text):
            counts[t] = counts.get(t, 0) + 1
        feats: dict[int, float] = {}
        for t, tf in counts.items():
            digest = _term_hash(t, self.seed)
            bucket = int.from_bytes(digest[:8], "big") % self.d_in
            sign = 1.0 if digest[8] & 1 else -1.0
            idf = self.idf_table_.get(t, self.default_idf_)
            feats[bucket] = feats.get(bucket, 0.0) + sign * tf * idf
        return feats

    def _raw(self, feats: dict[int, float], matrix: np.ndarray) -> np.ndarray:
        u = np.zeros(self.d_out, dtype=np.float64)
        for bucket, w in feats.items():
            u += w * matrix[bucket]
        return u

    @staticmethod
    def _normalize(u: np.ndarray) -> np.ndarray:
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            return np.zeros_like(u)
        return u / norm

    def _passage_matrix(self) -> np.ndarray:
        return self.projection_ if self.shared_weights else self.projection_passage_

    def encode(self, text: str) -> np.ndarray:
        """Unit-length query embedding (all-zeros for token-free text)."""
        check_is_fitted(self, "projection_")
        return self._normalize(self._raw(self.features(text), self.projection_))

    def encode_passage(self, text: str) -> np.ndarray:
        check_is_fitted(self, "projection_")
        return self._normalize(self._raw(self.features(text), self._passage_matrix()))

    def transform(self, texts: Sequence[str]) -> np.ndarray:
        """Encode a batch of query texts into an (n, d_out) array."""
        return np.array([self.encode(t) for t in texts], dtype=np.float64)

    # ------------------------------------------------------------------
    # Contrastive training
    # ------------------------------------------------------------------

    def batch_loss_and_grad(
        self, pairs: Sequence[tuple[ClaimContext | str, Passage | str]]
    ) -> tuple[float, dict[int, np.ndarray], dict[int, np.ndarray]]:
        """Softmax cross-entropy over in-batch negatives, plus projection grads.

        Returns (loss, query-side row gradients, passage-side row gradients);
        the gradients are sparse maps from projection row to a d_out vector.
        With shared weights both maps apply to the same matrix.
        """
        check_is_fitted(self, "projection_")
        q_feats = [self.features(self._query_text(q)) for q, _ in pairs]
        p_feats = [self.features(p.text if isinstance(p, Passage) else p) for _, p in pairs]
        return self._loss_and_grad_from_features(q_feats, p_feats)

    @staticmethod
    def _query_text(q: ClaimContext | str) -> str:
        if isinstance(q, ClaimContext):
            return f"{q.article_title} {q.section_path} {q.claim_sentence}"
        return q

    def _loss_and_grad_from_features(
        self, q_feats: list[dict[int, float]], p_feats: list[dict[int, float]]
    ) -> tuple[float, dict[int, np.ndarray], dict[int, np.ndarray]]:
        n = len(q_feats)
        p_matrix = self._passage_matrix()
        uq = np.array([self._raw(f, self.projection_) for f in q_feats])
        up = np.array([self._raw(f, p_matrix) for f in p_feats])
        rq = np.linalg.norm(uq, axis=1)
        rp = np.linalg.norm(up, axis=1)
        q = np.where(rq[:, None] > 0, uq / np.where(rq[:, None] > 0, rq[:, None], 1.0), 0.0)
        p = np.where(rp[:, None] > 0, up / np.where(rp[:, None] > 0, rp[:, None], 1.0), 0.0)

        scores = q @ p.T / self.tau
        row_max = scores.max(axis=1, keepdims=True)
        exp = np.exp(scores - row_max)
        softmax = exp / exp.sum(axis=1, keepdims=True)
        log_probs = scores - row_max - np.log(exp.sum(axis=1, keepdims=True))
        loss = float(-np.mean(np.diag(log_probs)))

        d_scores = (softmax - np.eye(n)) / n
        dq = d_scores @ p / self.tau
        dp = d_scores.T @ q / self.tau

        # Back through L2 normalization; zero rows get zero gradient.
        duq = np.zeros_like(uq)
        dup = np.zeros_like(up)
        for i in range(n):
            if rq[i] > 0:
                duq[i] = (dq[i] - np.dot(dq[i], q[i]) * q[i]) / rq[i]
            if rp[i] > 0:
                dup[i] = (dp[i] - np.dot(dp[i], p[i]) * p[i]) / rp[i]

        grad_q: dict[int, np.ndarray] = {}
        grad_p: dict[int, np.ndarray] = {}
        for i, feats in enumerate(q_feats):
            for bucket, w in feats.items():
                if bucket in grad_q:
                    grad_q[bucket] = grad_q[bucket] + w * duq[i]
                else:
                    grad_q[bucket] = w * duq[i]
        for i, feats in enumerate(p_feats):
            for bucket, w in feats.items():
                if bucket in grad_p:
                    grad_p[bucket] = grad_p[bucket] + w * dup[i]
                else:
                    grad_p[bucket] = w * dup[i]
        return loss, grad_q, grad_p

    def fit_pairs(
        self,
        pairs: Sequence[tuple[ClaimContext | str, Passage | str]],
        batch_size: int | None = None,
        learning_rate: float | None = None,
        epochs: int | None = None,
    ) -> "FeatureHashEncoder":
        """Train the projection on (claim context, cited passage) pairs."""
        check_is_fitted(self, "projection_")
        bs = batch_size or self.batch_size
        lr = learning_rate if learning_rate is not None else self.learning_rate
        n_epochs = epochs if epochs is not None else self.epochs
        if bs < 1:
            raise ValueError("batch_size must be >= 1")
        rng = np.random.default_rng(self.seed + 0x5F5E)
        self.training_loss_ = []
        for _ in range(n_epochs):
            order = rng.permutation(len(pairs))
            losses = []
            for start in range(0, len(pairs), bs):
                batch = [pairs[i] for i in order[start : start + bs]]
                loss, grad_q, grad_p = self.batch_loss_and_grad(batch)
                if self.shared_weights:
                    for bucket, g in grad_q.items():
                        self.projection_[bucket] -= lr * g
                    for bucket, g in grad_p.items():
                        self.projection_[bucket] -= lr * g
                else:
                    for bucket, g in grad_q.items():
                        self.projection_[bucket] -= lr * g
                    for bucket, g in grad_p.items():
                        self.projection_passage_[bucket] -= lr * g
                losses.append(loss)
            self.training_loss_.append(float(np.mean(losses)) if losses else 0.0)
        return self

    # ------------------------------------------------------------------
    # Checkpointing
    # ------------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        header = {
            "format": self.FORMAT,
            "d_in": self.d_in,
            "d_out": self.d_out,
            "seed": self.seed,
            "tau": self.tau,
            "shared_weights": self.shared_weights,
            "default_idf": self.default_idf_,
        }
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
            fh.write(json.dumps(self.idf_table_, sort_keys=True).encode("utf-8") + b"\n")
            fh.write(np.ascontiguousarray(self.projection_, dtype=np.float64).tobytes())
            if not self.shared_weights:
                fh.write(np.ascontiguousarray(self.projection_passage_, dtype=np.float64).tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "FeatureHashEncoder":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode("utf-8"))
            if header.get("format") != cls.FORMAT:
                raise ValueError(f"unsupported encoder format: {header.get('format')!r}")
            idf_table = json.loads(fh.readline().decode("utf-8"))
            enc = cls(
                d_in=header["d_in"],
                d_out=header["d_out"],
                seed=header["seed"],
                tau=header["tau"],
                shared_weights=header["shared_weights"],
            )
            enc.idf_table_ = idf_table
            enc.default_idf_ = header["default_idf"]
            size = header["d_in"] * header["d_out"]
            buf = fh.read(size * 8)
            enc.projection_ = np.frombuffer(buf, dtype=np.float64).reshape(
                header["d_in"], header["d_out"]
            ).copy()
            if not header["shared_weights"]:
                buf = fh.read(size * 8)
                enc.projection_passage_ = np.frombuffer(buf, dtype=np.float64).reshape(
                    header["d_in"], header["d_out"]
                ).copy()
        return enc


def train_biencoder(
    enc: FeatureHashEncoder,
    pairs: Sequence[tuple[ClaimContext | str, Passage | str]],
    batch_size: int | None = None,
    learning_rate: float | None = None,
    epochs: int | None = None,
) -> FeatureHashEncoder:
    return enc.fit_pairs(pairs, batch_size=batch_size, learning_rate=learning_rate, epochs=epochs)


class VectorIndex:
    """Exhaustive inner-product index over passage embeddings."""

    FORMAT = "citecheck-vectors/1"

    def __init__(self, passage_ids: Sequence[str], matrix: np.ndarray):
        if len(passage_ids) != len(set(passage_ids)):
            raise ValueError("passage ids must be unique")
        if matrix.shape[0] != len(passage_ids):
            raise ValueError("matrix rows must match passage ids")
        self.passage_ids = list(passage_ids)
        self.matrix = np.asarray(matrix, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.passage_ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def save(self, path: str | Path) -> None:
        header = {"format": self.FORMAT, "n": len(self.passage_ids), "dim": self.dim}
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
            fh.write(json.dumps(self.passage_ids).encode("utf-8") + b"\n")
            fh.write(np.ascontiguousarray(self.matrix, dtype=np.float64).tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode("utf-8"))
            if header.get("format") != cls.FORMAT:
                raise ValueError(f"unsupported vector index format: {header.get('format')!r}")
            ids = json.loads(fh.readline().decode("utf-8"))
            buf = fh.read(header["n"] * header["dim"] * 8)
            matrix = np.frombuffer(buf, dtype=np.float64).reshape(header["n"], header["dim"]).copy()
        return cls(ids, matrix)


def build_vector_index(enc: FeatureHashEncoder, passages: Iterable[Passage]) -> VectorIndex:
    passages = list(passages)
    ids = [p.passage_id for p in passages]
    if passages:
        matrix = np.array([enc.encode_passage(p.text) for p in passages], dtype=np.float64)
    else:
        matrix = np.zeros((0, enc.d_out), dtype=np.float64)
    return VectorIndex(ids, matrix)


def knn_search(index: VectorIndex, query: np.ndarray, k: int) -> list[tuple[str, float]]:
    """Exact top-k by inner product, descending; ties by ascending passage id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (index.dim,):
        raise DimensionMismatchError(f"query dim {query.shape} does not match index dim {index.dim}")
    if len(index) == 0:
        return []
    scores = index.matrix @ query
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.passage_ids[i]))
    return [(index.passage_ids[i], float(scores[i])) for i in order[:k]]
