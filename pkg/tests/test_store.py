"""Embedding cache and results-log persistence."""

import json

import numpy as np
import pytest

from vidbench import HARNESS_VERSION
from vidbench.encoders import EmbeddingRecord
from vidbench.errors import StoreError
from vidbench.store import (
    RESULTS_SCHEMA_VERSION,
    CacheKey,
    EmbeddingNotFound,
    EmbeddingStore,
    append_results,
    read_results,
    write_results,
)


def make_record(rng, clip_id="clip-0", encoder_id="toy-d8-s0", key="clean:none:0:42", tokens=True):
    token_features = rng.normal(size=(4, 8)).astype(np.float32) if tokens else None
    gap = token_features.mean(axis=0) if tokens else rng.normal(size=8).astype(np.float32)
    return EmbeddingRecord(clip_id, encoder_id, key, gap, token_features)


def make_key(clip_id="clip-0", encoder_id="toy-d8-s0", perturbation_key="clean:none:0:42", **kw):
    return CacheKey(
        dataset_hash="abc123", clip_id=clip_id, encoder_id=encoder_id,
        perturbation_key=perturbation_key, **kw,
    )


class TestCacheKey:
    def test_field_validation(self):
        with pytest.raises(StoreError):
            make_key(clip_id="")
        with pytest.raises(StoreError):
            make_key(clip_id="a/b")

    def test_default_version(self):
        assert make_key().harness_version == HARNESS_VERSION


class TestEmbeddingStore:
    def test_round_trip_with_tokens(self, tmp_path, rng):
        store = EmbeddingStore(tmp_path)
        key, record = make_key(), make_record(rng)
        path = store.put(key, record)
        assert path.is_file()
        assert store.has(key)
        loaded = store.get(key)
        np.testing.assert_array_equal(loaded.gap_vector, record.gap_vector.astype(np.float32))
        np.testing.assert_array_equal(loaded.token_features, record.token_features)
        assert loaded.perturbation_key == key.perturbation_key

    def test_round_trip_token_free(self, tmp_path, rng):
        store = EmbeddingStore(tmp_path)
        key, record = make_key(), make_record(rng, tokens=False)
        store.put(key, record)
        loaded = store.get(key)
        assert loaded.token_features is None
        np.testing.assert_array_equal(loaded.gap_vector, record.gap_vector)

    def test_missing_raises_not_found(self, tmp_path):
        store = EmbeddingStore(tmp_path)
        assert not store.has(make_key())
        with pytest.raises(EmbeddingNotFound):
            store.get(make_key())

    def test_identity_mismatch_rejected_on_put(self, tmp_path, rng):
        store = EmbeddingStore(tmp_path)
        with pytest.raises(StoreError):
            store.put(make_key(clip_id="other"), make_record(rng))

    def test_dataset_hash_mismatch_detected_on_get(self, tmp_path, rng):
        store = EmbeddingStore(tmp_path)
        store.put(make_key(), make_record(rng))
        stale = CacheKey(
            dataset_hash="def456", clip_id="clip-0", encoder_id="toy-d8-s0",
            perturbation_key="clean:none:0:42",
        )
        with pytest.raises(StoreError):
            store.get(stale)

    def test_version_mismatch_refused(self, tmp_path, rng):
        store = EmbeddingStore(tmp_path)
        old = make_key(harness_version="0.0.0-old")
        store.put(old, make_record(rng))
        with pytest.raises(StoreError) as err:
            store.get(make_key())
        assert "stale" in str(err.value)

    def test_corrupt_payload_detected(self, tmp_path, rng):
        store = EmbeddingStore(tmp_path)
        key = make_key()
        path = store.put(key, make_record(rng))
        blob = bytearray(path.read_bytes())
        blob[-1] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(StoreError) as err:
            store.get(key)
        assert "checksum" in str(err.value)

    def test_truncated_payload_detected(self, tmp_path, rng):
        store = EmbeddingStore(tmp_path)
        key = make_key()
        path = store.put(key, make_record(rng))
        blob = path.read_bytes()
        path.write_bytes(blob[:-4])
        with pytest.raises(StoreError):
            store.get(key)

    def test_garbage_header_detected(self, tmp_path, rng):
        store = EmbeddingStore(tmp_path)
        key = make_key()
        path = store.put(key, make_record(rng))
        path.write_bytes(b"{not json\n" + b"\x00" * 16)
        with pytest.raises(StoreError):
            store.get(key)
        path.write_bytes(b"no newline at all")
        with pytest.raises(StoreError):
            store.get(key)

    def test_no_temp_files_left_and_overwrite(self, tmp_path, rng):
        store = EmbeddingStore(tmp_path)
        key = make_key()
        store.put(key, make_record(rng))
        store.put(key, make_record(rng))
        leftovers = list(tmp_path.rglob("*.tmp"))
        assert leftovers == []

    def test_matches_and_audit(self, tmp_path, rng):
        store = EmbeddingStore(tmp_path)
        records = {}
        keys = []
        for i in range(6):
            key = make_key(clip_id=f"clip-{i}")
            record = make_record(rng, clip_id=f"clip-{i}")
            store.put(key, record)
            records[key] = record
            keys.append(key)
        assert store.matches(keys[0], records[keys[0]])
        assert store.audit(keys, lambda k: records[k], sample=4, rng=np.random.default_rng(0)) == []

        tampered = dict(records)
        fresh = make_record(np.random.default_rng(999), clip_id="clip-0")
        tampered[keys[0]] = fresh
        flagged = store.audit(
            keys, lambda k: tampered[k], sample=len(keys), rng=np.random.default_rng(0)
        )
        assert flagged == [keys[0]]
        assert store.audit([], lambda k: None, sample=3, rng=np.random.default_rng(0)) == []


class TestResultsLog:
    def test_write_read_round_trip_and_schema(self, tmp_path):
        path = tmp_path / "axis.jsonl"
        records = [
            {"kind": "metric", "metric": "rsi", "value": 0.5, "group": {"encoder": "a"}},
            {"kind": "metric", "metric": "rsi", "value": 0.25, "group": {"encoder": "b"}},
            {"kind": "stat", "test": "ols_slope", "value": -0.1},
        ]
        write_results(path, records)
        loaded = read_results(path)
        assert len(loaded) == 3
        assert all(r["schema"] == RESULTS_SCHEMA_VERSION for r in loaded)

    def test_filters_check_group_fallback(self, tmp_path):
        path = tmp_path / "axis.jsonl"
        write_results(
            path,
            [
                {"kind": "metric", "metric": "rsi", "value": 0.5, "group": {"encoder": "a"}},
                {"kind": "metric", "metric": "top1", "value": 0.9, "group": {"encoder": "b"}},
                {"kind": "stat", "value": 1.0},
            ],
        )
        assert len(read_results(path, kind="metric")) == 2
        assert read_results(path, kind="metric", encoder="a")[0]["metric"] == "rsi"
        assert read_results(path, metric="top1")[0]["value"] == 0.9

    def test_rewrite_is_byte_identical(self, tmp_path):
        records = [{"kind": "metric", "metric": "auc", "value": 1 / 3}]
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        write_results(a, records)
        write_results(b, records)
        assert a.read_bytes() == b.read_bytes()

    def test_normalisation_rules(self, tmp_path):
        path = tmp_path / "axis.jsonl"
        with pytest.raises(StoreError):
            write_results(path, [{"metric": "rsi"}])  # no kind
        with pytest.raises(StoreError):
            write_results(path, ["not a dict"])
        with pytest.raises(StoreError):
            write_results(path, [{"kind": "metric", "value": float("nan")}])

    def test_to_record_objects_accepted(self, tmp_path):
        class Row:
            def to_record(self):
                return {"kind": "metric", "metric": "x", "value": 1.0}

        path = write_results(tmp_path / "axis.jsonl", [Row()])
        assert read_results(path)[0]["metric"] == "x"

    def test_append_and_torn_tail_tolerated(self, tmp_path):
        path = tmp_path / "axis.jsonl"
        write_results(path, [{"kind": "metric", "metric": "a", "value": 1.0}])
        append_results(path, [{"kind": "metric", "metric": "b", "value": 2.0}])
        with path.open("a") as fh:
            fh.write('{"kind": "metric", "val')  # interrupted append
        loaded = read_results(path)
        assert [r["metric"] for r in loaded] == ["a", "b"]

    def test_schema_and_missing_file_errors(self, tmp_path):
        path = tmp_path / "axis.jsonl"
        with pytest.raises(StoreError):
            read_results(path)
        path.write_text(json.dumps({"kind": "metric", "schema": 999}) + "\n")
        with pytest.raises(StoreError):
            read_results(path)
