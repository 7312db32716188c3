"""On-disk embedding cache.

Layout: ``cache/<encoder>/<perturbation-key>/<clip_id>.emb``. Each file is
one JSON header line followed by the raw little-endian float32 payload (GAP
vector first, then token rows). Writes go through a temp file and an atomic
rename, so concurrent readers only ever see complete records.
"""

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import HARNESS_VERSION
from .._util import sha256_hex
from ..encoders import EmbeddingRecord
from ..errors import StoreError

PAYLOAD_DTYPE = "<f4"


class EmbeddingNotFound(StoreError):
    """Requested cache key has no stored record."""


@dataclass(frozen=True)
class CacheKey:
    """Identity of one cached embedding; distinct inputs map to distinct paths."""

    dataset_hash: str
    clip_id: str
    encoder_id: str
    perturbation_key: str
    harness_version: str = HARNESS_VERSION

    def __post_init__(self):
        for name in ("dataset_hash", "clip_id", "encoder_id", "perturbation_key"):
            value = getattr(self, name)
            if not value:
                raise StoreError(f"cache key field {name} must be non-empty")
            if "/" in value or "\x00" in value:
                raise StoreError(f"cache key field {name} must not contain '/': {value!r}")


class EmbeddingStore:
    def __init__(self, root):
        self.root = Path(root)

    def path_for(self, key: CacheKey) -> Path:
        return (
            self.root
            / key.encoder_id
            / key.perturbation_key
            / f"{key.clip_id}.emb"
        )

    @staticmethod
    def _serialize(key: CacheKey, record: EmbeddingRecord) -> bytes:
        gap = np.ascontiguousarray(record.gap_vector, dtype=PAYLOAD_DTYPE)
        payload = gap.tobytes()
        n_tokens = 0
        if record.token_features is not None:
            tokens = np.ascontiguousarray(record.token_features, dtype=PAYLOAD_DTYPE)
            payload += tokens.tobytes()
            n_tokens = tokens.shape[0]
        header = {
            "dataset_hash": key.dataset_hash,
            "clip_id": key.clip_id,
            "encoder_id": key.encoder_id,
            "perturbation_key": key.perturbation_key,
            "harness_version": key.harness_version,
            "dim": int(gap.shape[0]),
            "n_tokens": int(n_tokens),
            "dtype": PAYLOAD_DTYPE,
            "checksum": sha256_hex(payload),
        }
        line = json.dumps(header, sort_keys=True, separators=(",", ":"))
        return line.encode() + b"\n" + payload

    def put(self, key: CacheKey, record: EmbeddingRecord) -> Path:
        if record.clip_id != key.clip_id or record.encoder_id != key.encoder_id:
            raise StoreError(
                f"record identity ({record.clip_id}, {record.encoder_id}) does not "
                f"match key ({key.clip_id}, {key.encoder_id})"
            )
        path = self.path_for(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        blob = self._serialize(key, record)
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(blob)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
        return path

    def has(self, key: CacheKey) -> bool:
        return self.path_for(key).is_file()

    def get(self, key: CacheKey) -> EmbeddingRecord:
        path = self.path_for(key)
        if not path.is_file():
            raise EmbeddingNotFound(f"no cached embedding at {path}")
        blob = path.read_bytes()
        newline = blob.find(b"\n")
        if newline < 0:
            raise StoreError(f"{path}: missing header line")
        try:
            header = json.loads(blob[:newline].decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise StoreError(f"{path}: unreadable header: {exc}") from exc
        if header.get("harness_version") != key.harness_version:
            raise StoreError(
                f"{path}: written by harness {header.get('harness_version')!r}, "
                f"expected {key.harness_version!r}; refusing stale read"
            )
        for name in ("dataset_hash", "clip_id", "encoder_id", "perturbation_key"):
            if header.get(name) != getattr(key, name):
                raise StoreError(
                    f"{path}: header {name}={header.get(name)!r} does not match key"
                )
        dim = int(header["dim"])
        n_tokens = int(header["n_tokens"])
        payload = blob[newline + 1 :]
        expected = (dim + n_tokens * dim) * 4
        if len(payload) != expected:
            raise StoreError(
                f"{path}: payload is {len(payload)} bytes, expected {expected}"
            )
        if sha256_hex(payload) != header["checksum"]:
            raise StoreError(f"{path}: checksum mismatch, record is corrupt")
        gap = np.frombuffer(payload[: dim * 4], dtype=PAYLOAD_DTYPE).copy()
        tokens = None
        if n_tokens:
            tokens = (
                np.frombuffer(payload[dim * 4 :], dtype=PAYLOAD_DTYPE)
                .reshape(n_tokens, dim)
                .copy()
            )
        return EmbeddingRecord(
            clip_id=key.clip_id,
            encoder_id=key.encoder_id,
            perturbation_key=key.perturbation_key,
            gap_vector=gap,
            token_features=tokens,
        )

    def matches(self, key: CacheKey, record: EmbeddingRecord) -> bool:
        """Byte-level comparison of a stored record against a fresh one."""
        path = self.path_for(key)
        if not path.is_file():
            return False
        return path.read_bytes() == self._serialize(key, record)

    def audit(self, keys, recompute, sample: int, rng) -> list:
        """Recompute a random sample of cached records; return mismatched keys.

        ``recompute(key) -> EmbeddingRecord`` must perform the original
        computation. An empty return means the sampled cache entries are
        byte-identical to recomputation.
        """
        keys = list(keys)
        if not keys:
            return []
        sample = min(sample, len(keys))
        picked = rng.choice(len(keys), size=sample, replace=False)
        return [
            keys[i] for i in sorted(picked) if not self.matches(keys[i], recompute(keys[i]))
        ]
