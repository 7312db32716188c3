"""Seeding, summation, and worker-pool helpers."""

import hashlib
import math

import numpy as np
import pytest

from vidbench._util import exact_mean, generator_from, parallel_map, sha256_hex, stable_seed


class TestStableSeed:
    def test_deterministic_and_63_bit(self):
        seed = stable_seed("corruption:snow:3:42", "clip-001")
        assert seed == stable_seed("corruption:snow:3:42", "clip-001")
        assert 0 <= seed < (1 << 63)

    def test_part_order_matters(self):
        assert stable_seed("a", "b") != stable_seed("b", "a")

    def test_distinct_inputs_distinct_seeds(self):
        seeds = {stable_seed("key", i) for i in range(200)}
        assert len(seeds) == 200

    def test_matches_sha256_oracle(self):
        text = "x|y|3"
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        expected = int.from_bytes(digest[:8], "little") & ((1 << 63) - 1)
        assert stable_seed("x", "y", 3) == expected


class TestGeneratorFrom:
    def test_same_parts_same_stream(self):
        a = generator_from("spec", "clip").normal(size=8)
        b = generator_from("spec", "clip").normal(size=8)
        np.testing.assert_array_equal(a, b)

    def test_different_parts_different_stream(self):
        a = generator_from("spec", "clip-a").normal(size=8)
        b = generator_from("spec", "clip-b").normal(size=8)
        assert not np.array_equal(a, b)


class TestExactMean:
    def test_matches_fsum_oracle(self, rng):
        values = rng.normal(size=31).tolist()
        assert exact_mean(values) == math.fsum(values) / len(values)

    def test_order_independent_on_cancelling_values(self):
        values = [1e16, 1.0, -1e16, 3.0]
        permutations = [values, values[::-1], [1.0, -1e16, 3.0, 1e16]]
        results = {exact_mean(p) for p in permutations}
        assert results == {1.0}

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            exact_mean([])


class TestParallelMap:
    def test_preserves_order(self):
        items = list(range(50))
        assert parallel_map(lambda x: x * x, items, workers=4) == [x * x for x in items]

    def test_worker_count_does_not_change_output(self):
        items = [f"clip-{i}" for i in range(20)]
        fn = lambda s: sha256_hex(s.encode())
        assert parallel_map(fn, items, workers=1) == parallel_map(fn, items, workers=8)

    def test_empty_and_single(self):
        assert parallel_map(lambda x: x, [], workers=4) == []
        assert parallel_map(lambda x: x + 1, [41], workers=4) == [42]


def test_sha256_hex_matches_hashlib():
    data = b"payload"
    assert sha256_hex(data) == hashlib.sha256(data).hexdigest()
