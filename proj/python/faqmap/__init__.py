"""Multi-agent FAQ annotation pipeline (C++ core with Python bindings)."""

from ._core import (
    Bm25Index,
    FaqCorpus,
    FaqmapError,
    Pipeline,
    dedup_max_score,
    faq_embedding_text,
    mrr,
    ndcg_at_k,
    normalize_utterance,
    select_few_shots,
    tokenize,
    top_k_accuracy,
)

__all__ = [
    "Bm25Index",
    "FaqCorpus",
    "FaqmapError",
    "Pipeline",
    "dedup_max_score",
    "faq_embedding_text",
    "mrr",
    "ndcg_at_k",
    "normalize_utterance",
    "select_few_shots",
    "tokenize",
    "top_k_accuracy",
]
