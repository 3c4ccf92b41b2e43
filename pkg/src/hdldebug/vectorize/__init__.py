"""Keyword (TF-IDF) and semantic vectors plus the on-disk vector database."""

from hdldebug.vectorize.embed import (
    ChunkSequence,
    DimensionMismatch,
    FingerprintMismatch,
    HashEmbedder,
    RemoteEmbedder,
    chunk_sequence,
    fnv1a_64,
    hash_embed,
    remote_embed,
)
from hdldebug.vectorize.index import (
    IndexFormatError,
    VectorIndex,
    build_index,
    decode_index,
    encode_index,
    load_index,
    query_vectors,
    save_index,
)
from hdldebug.vectorize.tfidf import SparseVector, TfidfModel, fit_tfidf, keyword_vector, terms

__all__ = [
    "ChunkSequence",
    "DimensionMismatch",
    "FingerprintMismatch",
    "HashEmbedder",
    "IndexFormatError",
    "RemoteEmbedder",
    "SparseVector",
    "TfidfModel",
    "VectorIndex",
    "build_index",
    "chunk_sequence",
    "decode_index",
    "encode_index",
    "fit_tfidf",
    "fnv1a_64",
    "hash_embed",
    "keyword_vector",
    "load_index",
    "query_vectors",
    "remote_embed",
    "save_index",
    "terms",
]
