"""Persistence: embedding cache and results logs."""

from .embedding_store import (
    PAYLOAD_DTYPE,
    CacheKey,
    EmbeddingNotFound,
    EmbeddingStore,
)
from .results_log import (
    RESULTS_SCHEMA_VERSION,
    append_results,
    read_results,
    write_results,
)

__all__ = [
    "PAYLOAD_DTYPE",
    "RESULTS_SCHEMA_VERSION",
    "CacheKey",
    "EmbeddingNotFound",
    "EmbeddingStore",
    "append_results",
    "read_results",
    "write_results",
]
