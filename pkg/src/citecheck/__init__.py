"""Citation verification toolkit: hybrid passage retrieval, a trainable
claim-passage verifier, failed-citation detection, and a blind review
service."""

from .corpus import (
    CITATION_MARKER,
    CitationInstance,
    ClaimContext,
    DatasetSplit,
    Document,
    NoClaimError,
    ParseError,
    Passage,
    PassageStore,
    chunk_document,
    extract_claim_context,
    read_jsonl,
    split_by_article,
    write_jsonl,
)
from .dense import (
    DimensionMismatchError,
    FeatureHashEncoder,
    VectorIndex,
    build_vector_index,
    knn_search,
    train_biencoder,
)
from .evaluation import (
    MetricReport,
    PRPoint,
    RankedResult,
    bucket_by_score,
    fleiss_kappa,
    majority_vote,
    pr_curve_failed,
    precision_at_1,
    precision_at_recall,
    sign_test,
    success_rate_at_k,
    url_depth,
)
from .fusion import Candidate, merge
from .pipeline import Pipeline, PipelineConfig, evaluate_results_file
from .sparse import (
    Bm25Index,
    EmptyCorpusError,
    SparseQuery,
    UnknownPassageError,
    build_index,
    build_query,
    expand_query,
    tokenize,
)
from .verifier import (
    FEATURE_NAMES,
    ArityMismatchError,
    CrossScorer,
    EmptyDocumentError,
    VerificationResult,
    extract_features,
    mine_negatives,
    train_em,
)

__version__ = "0.1.0"
