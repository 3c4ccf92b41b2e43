"""Dense semantic embedders.

``HashEmbedder`` is the offline default: signed character-trigram feature
hashing with FNV-1a. ``RemoteEmbedder`` splits the framed query into
fixed-size token chunks, embeds each through the transport, and mean-pools.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from hdldebug.minihdl.tokenizer import significant_tokens

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

CLS = "[CLS]"
SEP = "[SEP]"


class DimensionMismatch(ValueError):
    pass


class FingerprintMismatch(ValueError):
    pass


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def hash_embed(buggy: str, message: str, dim: int = 256) -> np.ndarray:
    if dim < 8:
        raise ValueError("dim must be >= 8")
    text = buggy + "\n" + message
    vec = np.zeros(dim)
    for i in range(len(text) - 2):
        h = fnv1a_64(text[i : i + 3].encode("utf-8"))
        vec[h % dim] += -1.0 if h >> 63 else 1.0
    return _normalize(vec)


@dataclass(frozen=True)
class ChunkSequence:
    chunks: List[List[str]]

    def tokens(self) -> List[str]:
        return [tok for chunk in self.chunks for tok in chunk]


def chunk_sequence(buggy: str, message: str, n_s: int = 256) -> ChunkSequence:
    if n_s < 8:
        raise ValueError("n_s must be >= 8")
    seq = (
        [CLS]
        + [t.text for t in significant_tokens(buggy)]
        + [SEP]
        + [t.text for t in significant_tokens(message)]
    )
    return ChunkSequence([seq[i : i + n_s] for i in range(0, len(seq), n_s)])


def remote_embed(chunks: ChunkSequence, transport, dim: int, model: Optional[str] = None) -> np.ndarray:
    from hdldebug.llm.transport import embed

    vectors = embed(transport, [" ".join(c) for c in chunks.chunks], model=model)
    for v in vectors:
        if len(v) != dim:
            raise DimensionMismatch(f"service returned dim {len(v)}, expected {dim}")
    return _normalize(np.mean(np.asarray(vectors, dtype=np.float64), axis=0))


def _fingerprint(kind: str, dim: int, config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return f"{kind}/{dim}/{hashlib.sha256(blob).hexdigest()[:16]}"


class HashEmbedder:
    kind = "hash"

    def __init__(self, dim: int = 256):
        if dim < 8:
            raise ValueError("dim must be >= 8")
        self.dim = dim

    @property
    def fingerprint(self) -> str:
        return _fingerprint(self.kind, self.dim, {"features": "char3-fnv1a64-signed"})

    def embed(self, buggy: str, message: str) -> np.ndarray:
        return hash_embed(buggy, message, self.dim)


class RemoteEmbedder:
    kind = "remote"

    def __init__(self, transport, dim: int = 256, n_s: int = 256, model: Optional[str] = None):
        self.transport = transport
        self.dim = dim
        self.n_s = n_s
        self.model = model

    @property
    def fingerprint(self) -> str:
        config = {"model": self.model, "n_s": self.n_s, "pool": "mean"}
        return _fingerprint(self.kind, self.dim, config)

    def embed(self, buggy: str, message: str) -> np.ndarray:
        return remote_embed(chunk_sequence(buggy, message, self.n_s), self.transport, self.dim, self.model)
