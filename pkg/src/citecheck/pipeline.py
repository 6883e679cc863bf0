"""Configuration and orchestration: index building, training, claim
verification, and evaluation runs over a corpus on disk."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .corpus import (
    CitationInstance,
    ClaimContext,
    Document,
    PassageStore,
    extract_claim_context,
    read_jsonl,
    split_by_article,
)
from .dense import FeatureHashEncoder, VectorIndex, build_vector_index, knn_search
from .evaluation import MetricReport, RankedResult, precision_at_1, pr_curve_failed, success_rate_at_k
from .fusion import Candidate, merge
from .sparse import Bm25Index, build_query, expand_query
from .verifier import CrossScorer, VerificationResult, extract_features


@dataclass
class PipelineConfig:
    """Everything the CLI commands need, readable from a key = value file."""

    documents: str = "data/documents.jsonl"
    instances: str = "data/instances.jsonl"
    index_dir: str = "artifacts/index"
    checkpoint_dir: str = "artifacts/checkpoints"
    annotations: str = "artifacts/annotations.jsonl"
    window_words: int = 100
    stride_words: int = 100
    k_sparse: int = 100
    k_dense: int = 100
    expansion_terms: int = 4
    flag_threshold: float = 0.0
    port: int = 8123
    seed: int = 7
    train_ratio: float = 0.6
    dev_ratio: float = 0.2
    test_ratio: float = 0.2
    d_in: int = 2**18
    d_out: int = 64
    tau: float = 1.0
    encoder_learning_rate: float = 0.1
    encoder_epochs: int = 3
    encoder_batch_size: int = 16
    em_learning_rate: float = 0.5
    em_epochs: int = 5
    n_negatives: int = 8
    budget_words: int = 300

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        """Parse a plain ``key = value`` file; unknown keys are an error."""
        values: dict = {}
        valid = {f.name: f.type for f in fields(cls)}
        casts = {int: int, float: float, str: str}
        for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {line_no}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in valid:
                raise ValueError(f"{path}: line {line_no}: unknown key {key!r}")
            default = getattr(cls(), key)
            try:
                values[key] = type(default)(value)
            except ValueError as exc:
                raise ValueError(f"{path}: line {line_no}: bad value for {key!r}: {value!r}") from exc
        return cls(**values)

    def write(self, path: str | Path) -> None:
        lines = [f"{f.name} = {getattr(self, f.name)}" for f in fields(self)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def require_inputs(self) -> None:
        if self.k_sparse < 1 or self.k_dense < 1:
            raise ValueError("k_sparse and k_dense must be >= 1")
        for key in ("documents", "instances"):
            p = Path(getattr(self, key))
            if not p.exists():
                raise FileNotFoundError(f"config path {key} = {p} does not exist")

    # Artifact locations -------------------------------------------------

    @property
    def bm25_path(self) -> Path:
        return Path(self.index_dir) / "bm25.json"

    @property
    def vectors_path(self) -> Path:
        return Path(self.index_dir) / "vectors.bin"

    @property
    def encoder_path(self) -> Path:
        return Path(self.checkpoint_dir) / "encoder.bin"

    @property
    def scorer_path(self) -> Path:
        return Path(self.checkpoint_dir) / "scorer.txt"


@dataclass
class Pipeline:
    """Loaded corpus plus retrieval structures and the verifier."""

    config: PipelineConfig
    store: PassageStore
    instances: list[CitationInstance]
    bm25: Bm25Index
    encoder: FeatureHashEncoder
    vectors: VectorIndex
    scorer: CrossScorer | None = field(default=None)

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def build(cls, config: PipelineConfig) -> "Pipeline":
        """Load the corpus and build fresh indexes in memory."""
        config.require_inputs()
        documents = read_jsonl(config.documents, Document)
        instances = read_jsonl(config.instances, CitationInstance)
        store = PassageStore(documents, config.window_words, config.stride_words)
        passages = list(store)
        bm25 = Bm25Index().fit(passages)
        encoder = FeatureHashEncoder(
            d_in=config.d_in,
            d_out=config.d_out,
            seed=config.seed,
            tau=config.tau,
            learning_rate=config.encoder_learning_rate,
            epochs=config.encoder_epochs,
            batch_size=config.encoder_batch_size,
        ).fit(passages)
        vectors = build_vector_index(encoder, passages)
        return cls(config, store, instances, bm25, encoder, vectors)

    @classmethod
    def load(cls, config: PipelineConfig) -> "Pipeline":
        """Load the corpus plus previously saved indexes and checkpoints."""
        config.require_inputs()
        documents = read_jsonl(config.documents, Document)
        instances = read_jsonl(config.instances, CitationInstance)
        store = PassageStore(documents, config.window_words, config.stride_words)
        bm25 = Bm25Index.load(config.bm25_path)
        encoder = FeatureHashEncoder.load(config.encoder_path)
        vectors = VectorIndex.load(config.vectors_path)
        pipe = cls(config, store, instances, bm25, encoder, vectors)
        if config.scorer_path.exists():
            pipe.scorer = CrossScorer.load(
                config.scorer_path,
                threshold=config.flag_threshold,
                feature_idf=bm25.idf,
            )
        return pipe

    def save_indexes(self) -> None:
        Path(self.config.index_dir).mkdir(parents=True, exist_ok=True)
        self.bm25.save(self.config.bm25_path)
        self.vectors.save(self.config.vectors_path)

    def save_checkpoints(self) -> None:
        Path(self.config.checkpoint_dir).mkdir(parents=True, exist_ok=True)
        self.encoder.save(self.config.encoder_path)
        if self.scorer is not None:
            self.scorer.save(self.config.scorer_path)

    # ------------------------------------------------------------------
    # Retrieval
    # ------------------------------------------------------------------

    def dense_query_text(self, ctx: ClaimContext) -> str:
        return f"{ctx.article_title} {ctx.section_path} {ctx.claim_sentence}"

    def sparse_search(self, ctx: ClaimContext, k: int) -> list[tuple[str, float]]:
        expansion = expand_query(ctx, self.config.expansion_terms, self.bm25)
        return self.bm25.search(build_query(ctx, expansion), k)

    def dense_search(self, ctx: ClaimContext, k: int) -> list[tuple[str, float]]:
        return knn_search(self.vectors, self.encoder.encode(self.dense_query_text(ctx)), k)

    def retrieve_candidates(self, ctx: ClaimContext) -> list[Candidate]:
        sparse_top = self.sparse_search(ctx, self.config.k_sparse)
        dense_top = self.dense_search(ctx, self.config.k_dense)
        return merge(sparse_top, dense_top, self.store.doc_url_of)

    # ------------------------------------------------------------------
    # Training
    # ------------------------------------------------------------------

    def splits(self) -> dict[str, set[str]]:
        ratios = (self.config.train_ratio, self.config.dev_ratio, self.config.test_ratio)
        return {
            s.name: s.instance_ids
            for s in split_by_article(self.instances, ratios, self.config.seed)
        }

    def instances_in(self, split_name: str) -> list[CitationInstance]:
        ids = self.splits()[split_name]
        return [inst for inst in self.instances if inst.instance_id in ids]

    def _gold_passage(self, inst: CitationInstance):
        """Best-overlap passage of the cited document, used to seed training."""
        ctx = extract_claim_context(inst)
        passages = self.store.passages_for(inst.cited_url)
        if not passages:
            return None
        best, best_score = None, -1.0
        for p in passages:
            f = extract_features(ctx, p.text)
            overlap = f[0] + f[1]  # jaccard + coverage
            if overlap > best_score:
                best, best_score = p, overlap
        return best

    def train(self) -> dict:
        """Train the dense encoder and the EM verifier on the train split.

        The vector index is re-encoded afterwards so that search uses the
        trained projection.  Returns a small training summary.
        """
        train_instances = self.instances_in("train")
        pairs = []
        for inst in train_instances:
            gold = self._gold_passage(inst)
            if gold is not None:
                pairs.append((extract_claim_context(inst), gold))
        if pairs:
            self.encoder.fit_pairs(pairs)
            self.vectors = build_vector_index(self.encoder, list(self.store))

        self.scorer = CrossScorer(
            threshold=self.config.flag_threshold,
            epochs=self.config.em_epochs,
            learning_rate=self.config.em_learning_rate,
            n_negatives=self.config.n_negatives,
            feature_idf=self.bm25.idf,
        )
        retrieve = lambda ctx, k: self.sparse_search(ctx, k)  # noqa: E731
        self.scorer.fit(train_instances, retrieve, self.store)
        return {
            "n_train_instances": len(train_instances),
            "n_encoder_pairs": len(pairs),
            "n_skipped": len(self.scorer.skipped_ids_),
            "encoder_loss": self.encoder.training_loss_ if pairs else [],
            "em_loss": self.scorer.loss_history_,
        }

    # ------------------------------------------------------------------
    # Verification and evaluation
    # ------------------------------------------------------------------

    def verify_instance(self, inst: CitationInstance) -> dict:
        """Run retrieval + reranking for one claim; JSON-friendly output.

        ``ranked_urls`` is the system's own document ranking (retrieved
        candidates reranked by the verifier, without the original citation
        injected), which is what the retrieval metrics consume.  The original
        citation's verdict and the replacement recommendation are reported
        alongside.
        """
        if self.scorer is None:
            raise RuntimeError("no trained scorer; run train first")
        ctx = extract_claim_context(inst)
        candidates = self.retrieve_candidates(ctx)
        original = self.store.documents.get(inst.cited_url)
        if original is None:
            raise KeyError(f"cited document not in corpus: {inst.cited_url!r}")
        ranked, recommendation = self.scorer.rerank(ctx, candidates, original, self.store)
        original_result = next(r for r in ranked if r.doc_url == inst.cited_url)
        candidate_ranking = self.scorer.score_candidates(ctx, candidates, self.store)
        return {
            "instance_id": inst.instance_id,
            "claim": ctx.claim_sentence,
            "gold_url": inst.cited_url,
            "failed": inst.failed_verification,
            "featured": inst.featured,
            "original": {
                "url": original_result.doc_url,
                "score": original_result.score,
                "flagged": original_result.flagged,
                "best_passage_id": original_result.best_passage_id,
            },
            "ranked_urls": [r.doc_url for r in candidate_ranking],
            "ranked_scores": [r.score for r in candidate_ranking],
            "recommendation": None
            if recommendation is None
            else {"url": recommendation.doc_url, "score": recommendation.score},
        }

    def retrieval_ranking(self, ctx: ClaimContext, hits: Sequence[tuple[str, float]]) -> list[str]:
        """Document ranking induced by passage hits (best passage wins)."""
        seen: list[str] = []
        for pid, _ in hits:
            url = self.store.doc_url_of(pid)
            if url not in seen:
                seen.append(url)
        return seen

    def rerank_ranking(self, results: Sequence[VerificationResult]) -> list[str]:
        return _dedup_urls(results)


def _dedup_urls(results: Sequence[VerificationResult]) -> list[str]:
    seen: list[str] = []
    for r in results:
        if r.doc_url not in seen:
            seen.append(r.doc_url)
    return seen


def evaluate_results_file(path: str | Path, ks: Sequence[int] = (1, 5, 10)) -> MetricReport:
    """Build a MetricReport from a verify-output JSONL file."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                if "error" not in row:
                    rows.append(row)
    results = [
        RankedResult(
            instance_id=row["instance_id"],
            gold_url=row["gold_url"],
            ranked_urls=tuple(row["ranked_urls"]),
        )
        for row in rows
    ]
    report = MetricReport()
    report.metrics["n_instances"] = float(len(results))
    report.metrics["p_at_1"] = precision_at_1(results)
    for k in ks:
        report.metrics[f"sr_at_{k}"] = success_rate_at_k(results, k)
    scored = [
        (row["instance_id"], row["original"]["score"], bool(row.get("failed")))
        for row in rows
        if "original" in row
    ]
    if scored and any(s[2] for s in scored) and not all(s[2] for s in scored):
        report.curves["failed_detection"] = pr_curve_failed(scored)
    return report
