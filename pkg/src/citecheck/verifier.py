"""Claim-passage verification: pair features, a linear cross-scorer with
max-over-passages document aggregation, reranking with failure flagging, and
EM training from positive-only citation data.

A document's verification score is the maximum of its per-passage scores;
the scorer is trained to rank the cited document's best passage above mined
negatives, treating which passage holds the evidence as a latent choice.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import (
    ClaimContext,
    CitationInstance,
    Document,
    Passage,
    PassageStore,
    chunk_document,
    extract_claim_context,
)
from .fusion import Candidate
from .sparse import tokenize

FEATURE_NAMES = (
    "jaccard_unigram",
    "claim_coverage",
    "tfidf_cosine",
    "max_ngram_match",
    "bigram_overlap",
    "title_overlap",
    "log_len_ratio",
    "bias",
)


class ArityMismatchError(ValueError):
    """Weight vector length does not match the feature vector."""


class EmptyDocumentError(ValueError):
    """A document with no passages cannot be scored."""


def _longest_common_ngram(a: list[str], b: list[str]) -> int:
    """Length of the longest common contiguous token run (O(len(a)*len(b)))."""
    if not a or not b:
        return 0
    best = 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
                if cur[j] > best:
                    best = cur[j]
        prev = cur
    return best


def _bigrams(tokens: list[str]) -> set[tuple[str, str]]:
    return {(tokens[i], tokens[i + 1]) for i in range(len(tokens) - 1)}


def extract_features(
    ctx: ClaimContext,
    passage_text: str,
    idf: Mapping[str, float] | Callable[[str], float] | None = None,
) -> np.ndarray:
    """Named overlap features for one claim-passage pair.

    All features live in [0, 1] except log_len_ratio (finite, add-one
    smoothed) and the constant bias.  Tokenization matches the sparse
    retriever.  ``idf`` optionally weights the cosine feature (terms missing
    from a mapping weigh 1.0); without it the cosine is over plain term
    frequencies.
    """
    claim = tokenize(ctx.claim_sentence)
    passage = tokenize(passage_text)
    claim_set, passage_set = set(claim), set(passage)

    union = claim_set | passage_set
    inter = claim_set & passage_set
    jaccard = len(inter) / len(union) if union else 0.0
    coverage = len(inter) / len(claim_set) if claim_set else 0.0

    if idf is None:
        idf_fn = None
    elif callable(idf):
        idf_fn = idf
    else:
        idf_fn = lambda t: idf.get(t, 1.0)  # noqa: E731

    def tf(tokens: list[str]) -> dict[str, float]:
        counts: dict[str, float] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0.0) + 1.0
        if idf_fn is not None:
            for t in counts:
                counts[t] *= idf_fn(t)
        return counts

    tf_c, tf_p = tf(claim), tf(passage)
    dot = sum(w * tf_p[t] for t, w in tf_c.items() if t in tf_p)
    norm_c = np.sqrt(sum(w * w for w in tf_c.values()))
    norm_p = np.sqrt(sum(w * w for w in tf_p.values()))
    cosine = float(dot / (norm_c * norm_p)) if norm_c > 0 and norm_p > 0 else 0.0

    ngram = _longest_common_ngram(claim, passage) / len(claim) if claim else 0.0

    cb, pb = _bigrams(claim), _bigrams(passage)
    bigram = len(cb & pb) / len(cb) if cb else 0.0

    title = set(tokenize(ctx.article_title))
    title_overlap = len(title & passage_set) / len(title) if title else 0.0

    log_len_ratio = float(np.log((len(passage) + 1) / (len(claim) + 1)))

    return np.array(
        [jaccard, coverage, cosine, ngram, bigram, title_overlap, log_len_ratio, 1.0],
        dtype=np.float64,
    )


@dataclass(frozen=True)
class VerificationResult:
    """Document-level verdict: best passage, max score, and the failure flag."""

    doc_url: str
    best_passage_id: str
    score: float
    flagged: bool


def softmax_rank_loss_and_grad(
    weights: np.ndarray, positive: np.ndarray, negatives: np.ndarray
) -> tuple[float, np.ndarray]:
    """Softmax cross-entropy for ranking one positive above its negatives.

    Candidates are the positive row followed by the negative rows; the loss is
    -log softmax(scores)[0] and the gradient is sum_j (softmax_j - y_j) f_j.
    With no negatives the loss and gradient are exactly zero.
    """
    if negatives.size == 0:
        return 0.0, np.zeros_like(weights)
    feats = np.vstack([positive[None, :], negatives])
    scores = feats @ weights
    scores = scores - scores.max()
    exp = np.exp(scores)
    probs = exp / exp.sum()
    loss = float(-np.log(probs[0]))
    target = np.zeros(len(probs))
    target[0] = 1.0
    grad = (probs - target) @ feats
    return loss, grad


def initial_weights() -> np.ndarray:
    """Untrained starting point: unit weight on every overlap feature.

    Hard EM needs the first E-step to pick a content-bearing window; an
    all-zero start ties every passage, latches onto window 0 (usually front
    matter), and can drive the whole fit into an inverted basin.  A uniform
    positive prior over the overlap features starts the latent choice at the
    highest-overlap window instead.  Length ratio and bias start at zero.
    """
    weights = np.ones(len(FEATURE_NAMES), dtype=np.float64)
    weights[FEATURE_NAMES.index("log_len_ratio")] = 0.0
    weights[FEATURE_NAMES.index("bias")] = 0.0
    return weights


class CrossScorer(BaseEstimator):
    """Linear scorer over claim-passage features, trained by hard-assignment EM.

    Each epoch alternates, per instance: an E-step that picks the cited
    document's best-scoring passage under the current weights as the latent
    positive, and an M-step taking one gradient step on softmax cross-entropy
    against the instance's mined negative passages.  Instances whose cited
    document has no passages, or only passages with zero overlap features, are
    skipped and counted.
    """

    FORMAT = "citecheck-scorer/1"

    def __init__(
        self,
        threshold: float = 0.0,
        epochs: int = 5,
        learning_rate: float = 0.5,
        n_negatives: int = 8,
        feature_idf: Mapping[str, float] | Callable[[str], float] | None = None,
    ):
        self.threshold = threshold
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.n_negatives = n_negatives
        self.feature_idf = feature_idf

    @classmethod
    def from_weights(cls, weights: Sequence[float], threshold: float = 0.0, **kwargs) -> "CrossScorer":
        scorer = cls(threshold=threshold, **kwargs)
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (len(FEATURE_NAMES),):
            raise ArityMismatchError(
                f"expected {len(FEATURE_NAMES)} weights, got shape {weights.shape}"
            )
        scorer.weights_ = weights
        return scorer

    # ------------------------------------------------------------------
    # Scoring
    # ------------------------------------------------------------------

    def score_features(self, features: np.ndarray) -> float:
        check_is_fitted(self, "weights_")
        features = np.asarray(features, dtype=np.float64)
        if features.shape != self.weights_.shape:
            raise ArityMismatchError(
                f"feature vector shape {features.shape} does not match weights {self.weights_.shape}"
            )
        return float(features @ self.weights_)

    def score_pair(self, ctx: ClaimContext, passage_text: str) -> float:
        return self.score_features(extract_features(ctx, passage_text, self.feature_idf))

    def score_document(self, ctx: ClaimContext, passages: Sequence[Passage]) -> VerificationResult:
        """Max over per-passage scores; ties go to the lowest passage index."""
        if not passages:
            raise EmptyDocumentError("cannot score a document with no passages")
        best_i, best_score = 0, -np.inf
        for i, p in enumerate(passages):
            s = self.score_pair(ctx, p.text)
            if s > best_score:
                best_i, best_score = i, s
        best = passages[best_i]
        return VerificationResult(
            doc_url=best.doc_url,
            best_passage_id=best.passage_id,
            score=best_score,
            flagged=best_score < self.threshold,
        )

    def score_document_prefix(self, ctx: ClaimContext, doc: Document, budget_words: int = 300) -> float:
        """Single score over the first budget_words of the document."""
        if budget_words < 1:
            raise ValueError("budget_words must be >= 1")
        prefix = " ".join(doc.words()[:budget_words])
        return self.score_pair(ctx, prefix)

    def score_candidates(
        self, ctx: ClaimContext, candidates: Sequence[Candidate], store: PassageStore
    ) -> list[VerificationResult]:
        """Group candidates into documents and rank them by max passage score.

        Each document is scored over its retrieved passages only; the result
        is sorted descending with URL ties ascending.
        """
        by_doc: dict[str, list[Passage]] = {}
        for cand in candidates:
            by_doc.setdefault(cand.doc_url, []).append(store.get(cand.passage_id))
        results = []
        for url in by_doc:
            passages = sorted(by_doc[url], key=lambda p: p.index)
            results.append(self.score_document(ctx, passages))
        results.sort(key=lambda r: (-r.score, r.doc_url))
        return results

    def rerank(
        self,
        ctx: ClaimContext,
        candidates: Sequence[Candidate],
        original: Document,
        store: PassageStore,
    ) -> tuple[list[VerificationResult], VerificationResult | None]:
        """Rank candidate documents and the original citation for one claim.

        The original citation is scored over all of its passages (candidates
        only over their retrieved ones, so a re-retrieved original collapses
        into its own entry).  A replacement is recommended exactly when the
        original is not ranked above every other candidate (ties lose).
        """
        original_passages = store.passages_for(original.url)
        if not original_passages:
            original_passages = chunk_document(original, store.window_words, store.stride_words)
        original_result = self.score_document(ctx, original_passages)

        candidate_results = [
            r
            for r in self.score_candidates(ctx, candidates, store)
            if r.doc_url != original.url
        ]

        recommendation = None
        if candidate_results and candidate_results[0].score >= original_result.score:
            recommendation = candidate_results[0]

        ranked = sorted(
            candidate_results + [original_result],
            key=lambda r: (-r.score, r.doc_url == original.url, r.doc_url),
        )
        return ranked, recommendation

    def select_annotation_passage(
        self, ctx: ClaimContext, doc: Document, window_words: int = 100
    ) -> Passage:
        """Best-scoring window over overlapping passages (stride = window / 2).

        Overlap keeps evidence sentences that straddle a tiling boundary
        inside at least one candidate window.
        """
        stride = max(1, window_words // 2)
        windows = chunk_document(doc, window_words, stride)
        if not windows:
            raise EmptyDocumentError(f"document {doc.url!r} has no text")
        best = self.score_document(ctx, windows)
        return next(w for w in windows if w.passage_id == best.best_passage_id)

    # ------------------------------------------------------------------
    # EM training
    # ------------------------------------------------------------------

    def fit(
        self,
        instances: Iterable[CitationInstance],
        retrieve: Callable[[ClaimContext, int], Sequence[tuple[str, float]]],
        store: PassageStore,
        epochs: int | None = None,
        learning_rate: float | None = None,
    ) -> "CrossScorer":
        n_epochs = epochs if epochs is not None else self.epochs
        lr = learning_rate if learning_rate is not None else self.learning_rate

        prepared = []
        self.skipped_ids_ = []
        for inst in instances:
            ctx = extract_claim_context(inst)
            gold_passages = store.passages_for(inst.cited_url)
            if not gold_passages:
                self.skipped_ids_.append(inst.instance_id)
                continue
            gold_feats = np.array(
                [extract_features(ctx, p.text, self.feature_idf) for p in gold_passages]
            )
            # Everything except the bias column; all-zero rows carry no signal.
            if not np.any(gold_feats[:, :-1]):
                self.skipped_ids_.append(inst.instance_id)
                continue
            negatives = mine_negatives(retrieve, inst, self.n_negatives, store)
            neg_feats = (
                np.array([extract_features(ctx, p.text, self.feature_idf) for p in negatives])
                if negatives
                else np.zeros((0, len(FEATURE_NAMES)))
            )
            prepared.append((gold_feats, neg_feats))

        if not hasattr(self, "weights_"):
            self.weights_ = initial_weights()
        self.loss_history_ = []
        for _ in range(n_epochs):
            epoch_losses = []
            for gold_feats, neg_feats in prepared:
                latent = int(np.argmax(gold_feats @ self.weights_))
                loss, grad = softmax_rank_loss_and_grad(
                    self.weights_, gold_feats[latent], neg_feats
                )
                self.weights_ = self.weights_ - lr * grad
                epoch_losses.append(loss)
            self.loss_history_.append(float(np.mean(epoch_losses)) if epoch_losses else 0.0)
        return self

    # ------------------------------------------------------------------
    # Checkpointing
    # ------------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        check_is_fitted(self, "weights_")
        lines = [self.FORMAT]
        lines += [f"{name} {float(w)!r}" for name, w in zip(FEATURE_NAMES, self.weights_)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, **kwargs) -> "CrossScorer":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != cls.FORMAT:
            raise ValueError(f"unsupported scorer format: {lines[:1]!r}")
        weights = []
        for expected, line in zip(FEATURE_NAMES, lines[1:]):
            name, _, value = line.partition(" ")
            if name != expected:
                raise ValueError(f"feature name mismatch: expected {expected!r}, got {name!r}")
            weights.append(float(value))
        if len(weights) != len(FEATURE_NAMES):
            raise ValueError("scorer checkpoint is missing feature weights")
        return cls.from_weights(weights, **kwargs)


def mine_negatives(
    retrieve: Callable[[ClaimContext, int], Sequence[tuple[str, float]]],
    inst: CitationInstance,
    n: int,
    store: PassageStore,
    pool_size: int | None = None,
) -> list[Passage]:
    """Top retrieved passages that do not belong to the cited document.

    If the retrieval pool is dominated by the cited document this can return
    fewer than n passages, possibly none.
    """
    if n <= 0:
        return []
    ctx = extract_claim_context(inst)
    pool = retrieve(ctx, pool_size if pool_size is not None else max(50, n))
    negatives = []
    for pid, _ in pool:
        passage = store.get(pid)
        if passage.doc_url != inst.cited_url:
            negatives.append(passage)
            if len(negatives) == n:
                break
    return negatives


def train_em(
    scorer: CrossScorer,
    instances: Iterable[CitationInstance],
    retrieve: Callable[[ClaimContext, int], Sequence[tuple[str, float]]],
    store: PassageStore,
    epochs: int | None = None,
    learning_rate: float | None = None,
) -> CrossScorer:
    return scorer.fit(instances, retrieve, store, epochs=epochs, learning_rate=learning_rate)
