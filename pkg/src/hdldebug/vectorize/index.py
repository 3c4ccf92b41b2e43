"""Keyword + semantic vector database with a checksummed binary format.

Layout of ``index.hdbg`` (all integers unsigned 32-bit little-endian)::

    b"HDBG" | version | fp_len | fingerprint (UTF-8)
    | n | dense_dim | vocab_size
    | dense payload: n * dense_dim float32
    | per instance: count, then count * (term index u32, weight f32)
    | CRC-32 of every preceding byte

``meta.json`` carries ids, labels, the TF-IDF model and the embedder
fingerprint; ``instances.jsonl`` holds the instances for code retrieval.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
from scipy import sparse

from hdldebug.minihdl.generate import CodeInstance, dump_jsonl, load_jsonl
from hdldebug.vectorize.embed import FingerprintMismatch
from hdldebug.vectorize.tfidf import SparseVector, TfidfModel, fit_tfidf, keyword_vector

MAGIC = b"HDBG"
FORMAT_VERSION = 1
INDEX_FILE = "index.hdbg"
META_FILE = "meta.json"
INSTANCES_FILE = "instances.jsonl"

_SPARSE_RUN = np.dtype([("index", "<u4"), ("weight", "<f4")])


class IndexFormatError(ValueError):
    pass


@dataclass(eq=False)
class VectorIndex:
    ids: List[str]
    labels: List[str]
    keyword: List[SparseVector]  # float32 weights
    dense: np.ndarray  # (n, dim) float32
    fingerprint: str
    tfidf: TfidfModel
    instances: List[CodeInstance]

    def __len__(self) -> int:
        return len(self.ids)

    def __post_init__(self):
        n = len(self.ids)
        if not (len(self.labels) == len(self.keyword) == self.dense.shape[0] == len(self.instances) == n):
            raise ValueError("index arrays have unequal lengths")
        self._csr = None

    @property
    def keyword_matrix(self) -> sparse.csr_matrix:
        if self._csr is None:
            indptr = np.cumsum([0] + [len(v.indices) for v in self.keyword])
            indices = np.concatenate([v.indices for v in self.keyword]) if self.keyword else []
            data = np.concatenate([v.weights for v in self.keyword]) if self.keyword else []
            self._csr = sparse.csr_matrix(
                (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), indptr),
                shape=(len(self), len(self.tfidf.vocabulary)),
            )
        return self._csr

    def position(self, instance_id: str) -> int:
        return self.ids.index(instance_id)

    def check_fingerprint(self, embedder) -> None:
        if embedder.fingerprint != self.fingerprint:
            raise FingerprintMismatch(
                f"index built with {self.fingerprint}, query embedder is {embedder.fingerprint}"
            )

    def equals(self, other: "VectorIndex") -> bool:
        return (
            self.ids == other.ids
            and self.labels == other.labels
            and self.fingerprint == other.fingerprint
            and self.tfidf == other.tfidf
            and self.instances == other.instances
            and np.array_equal(self.dense, other.dense)
            and all(
                np.array_equal(a.indices, b.indices) and np.array_equal(a.weights, b.weights)
                for a, b in zip(self.keyword, other.keyword)
            )
        )


def _as_f32(vec: SparseVector) -> SparseVector:
    return SparseVector(vec.indices.astype(np.int64), vec.weights.astype(np.float32), vec.dim)


def build_index(instances: Sequence[CodeInstance], embedder) -> VectorIndex:
    if not instances:
        raise ValueError("cannot index an empty dataset")
    model = fit_tfidf([(i.buggy, i.message) for i in instances])
    keyword = [_as_f32(keyword_vector(model, i.buggy, i.message)) for i in instances]
    dense = np.stack([embedder.embed(i.buggy, i.message) for i in instances]).astype(np.float32)
    return VectorIndex(
        ids=[i.id for i in instances],
        labels=[i.label for i in instances],
        keyword=keyword,
        dense=dense,
        fingerprint=embedder.fingerprint,
        tfidf=model,
        instances=list(instances),
    )


def encode_index(index: VectorIndex) -> bytes:
    fp = index.fingerprint.encode("utf-8")
    n, dim = index.dense.shape
    parts = [
        MAGIC,
        struct.pack("<II", FORMAT_VERSION, len(fp)),
        fp,
        struct.pack("<III", n, dim, len(index.tfidf.vocabulary)),
        np.ascontiguousarray(index.dense, dtype="<f4").tobytes(),
    ]
    for vec in index.keyword:
        runs = np.empty(len(vec.indices), dtype=_SPARSE_RUN)
        runs["index"] = vec.indices
        runs["weight"] = vec.weights
        parts.append(struct.pack("<I", len(runs)))
        parts.append(runs.tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def decode_index(data: bytes):
    """Return (fingerprint, dense, keyword vectors, vocab_size)."""
    if len(data) < 4 + 8 + 12 + 4 or data[:4] != MAGIC:
        raise IndexFormatError("not an HDBG index file")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise IndexFormatError("CRC mismatch; index file is corrupt")
    version, fp_len = struct.unpack_from("<II", body, 4)
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    pos = 12
    fingerprint = body[pos : pos + fp_len].decode("utf-8")
    pos += fp_len
    n, dim, vocab = struct.unpack_from("<III", body, pos)
    pos += 12
    dense = np.frombuffer(body, dtype="<f4", count=n * dim, offset=pos).reshape(n, dim)
    pos += 4 * n * dim
    keyword = []
    for _ in range(n):
        (count,) = struct.unpack_from("<I", body, pos)
        pos += 4
        runs = np.frombuffer(body, dtype=_SPARSE_RUN, count=count, offset=pos)
        pos += _SPARSE_RUN.itemsize * count
        keyword.append(
            SparseVector(runs["index"].astype(np.int64), runs["weight"].astype(np.float32), vocab)
        )
    if pos != len(body):
        raise IndexFormatError("trailing bytes in index payload")
    return fingerprint, dense.astype(np.float32), keyword, vocab


def save_index(index: VectorIndex, directory: Union[str, Path]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / INDEX_FILE).write_bytes(encode_index(index))
    meta = {
        "ids": index.ids,
        "labels": index.labels,
        "fingerprint": index.fingerprint,
        "tfidf": index.tfidf.to_dict(),
    }
    (directory / META_FILE).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    dump_jsonl(index.instances, directory / INSTANCES_FILE)


def load_index(directory: Union[str, Path], embedder=None) -> VectorIndex:
    """Load an index; when ``embedder`` is given its fingerprint must match."""
    directory = Path(directory)
    fingerprint, dense, keyword, vocab = decode_index((directory / INDEX_FILE).read_bytes())
    meta = json.loads((directory / META_FILE).read_text(encoding="utf-8"))
    if meta["fingerprint"] != fingerprint:
        raise IndexFormatError("sidecar fingerprint disagrees with index file")
    tfidf = TfidfModel.from_dict(meta["tfidf"])
    if len(tfidf.vocabulary) != vocab:
        raise IndexFormatError("sidecar vocabulary size disagrees with index file")
    index = VectorIndex(
        ids=meta["ids"],
        labels=meta["labels"],
        keyword=keyword,
        dense=dense,
        fingerprint=fingerprint,
        tfidf=tfidf,
        instances=load_jsonl(directory / INSTANCES_FILE),
    )
    if embedder is not None:
        index.check_fingerprint(embedder)
    return index


def query_vectors(index: VectorIndex, embedder, buggy: str, message: str, check: bool = True):
    """Keyword and dense query vectors computed against ``index``'s models."""
    if check:
        index.check_fingerprint(embedder)
    return keyword_vector(index.tfidf, buggy, message), embedder.embed(buggy, message)
