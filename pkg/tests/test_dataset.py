"""Manifests, frame sampling, taxonomy, subsets, and the synthetic dataset."""

import numpy as np
import pytest

from vidbench.dataset import (
    DECODERS,
    SPLITS,
    TIERS,
    ClassTaxonomy,
    ClipEntry,
    ClipManifest,
    bundled_data_dir,
    bundled_labels_path,
    load_clip,
    load_labels,
    load_manifest,
    load_taxonomy,
    make_synthetic_dataset,
    pretend_subset,
    sample_frame_indices,
    sample_frames,
    stratified_subset,
    synthetic_clip,
    write_manifest,
)
from vidbench.dataset.frames import decode_npy, decode_npz
from vidbench.errors import ConfigError, DataError


def write_labels(path, n=4):
    path.write_text("".join(f"{c}\tact {c}\n" for c in range(n)), encoding="utf-8")
    return path


class TestLabels:
    def test_round_trip_with_comments(self, tmp_path):
        path = tmp_path / "labels.tsv"
        path.write_text("# header\n0\tpushing\n1\tpulling\n\n", encoding="utf-8")
        assert load_labels(path) == {0: "pushing", 1: "pulling"}

    def test_rejections(self, tmp_path):
        path = tmp_path / "labels.tsv"
        with pytest.raises(DataError):
            load_labels(path)  # missing
        path.write_text("0\ta\n0\tb\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_labels(path)  # duplicate id
        path.write_text("0\ta\n2\tb\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_labels(path)  # sparse ids
        path.write_text("x\ta\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_labels(path)  # non-integer id
        path.write_text("# only comments\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_labels(path)  # empty


class TestManifest:
    def test_load_and_helpers(self, tmp_path):
        labels = write_labels(tmp_path / "labels.tsv")
        path = tmp_path / "manifest.tsv"
        path.write_text(
            "# clip_id\tpath\tclass\tsplit\n"
            "b\tclips/b.npz\t1\ttest\n"
            "a\tclips/a.npz\t0\ttrain\n"
            "c\tclips/c.npz\t1\ttest\n",
            encoding="utf-8",
        )
        manifest = load_manifest(path, labels)
        assert len(manifest) == 3
        assert manifest.class_ids() == [0, 1]
        assert [e.clip_id for e in manifest.for_split("test")] == ["b", "c"]
        assert [e.clip_id for e in manifest.by_class("test")[1]] == ["b", "c"]
        assert manifest.class_counts() == {0: 1, 1: 2}
        with pytest.raises(DataError):
            manifest.for_split("holdout")

    def test_content_hash_order_independent(self, tmp_path):
        entries = [
            ClipEntry("a", "p/a", 0, "test"),
            ClipEntry("b", "p/b", 1, "train"),
        ]
        forward = ClipManifest(entries=tuple(entries), labels={0: "x", 1: "y"})
        backward = ClipManifest(entries=tuple(reversed(entries)), labels={0: "x", 1: "y"})
        assert forward.content_hash() == backward.content_hash()
        changed = ClipManifest(
            entries=(entries[0], ClipEntry("b", "p/b", 0, "train")), labels={0: "x", 1: "y"}
        )
        assert changed.content_hash() != forward.content_hash()

    @pytest.mark.parametrize(
        "row",
        [
            "a\tp\t0",  # missing field
            "a\tp\t0\ttest\nextra\tq\t0\tval\na\tp\t0\ttest",  # duplicate id
            "a\tp\t9\ttest",  # unknown class
            "a\tp\t0\tholdout",  # unknown split
            "a\tp\tzero\ttest",  # non-integer class
            "\tp\t0\ttest",  # empty clip id
        ],
    )
    def test_malformed_rows_rejected(self, tmp_path, row):
        labels = write_labels(tmp_path / "labels.tsv")
        path = tmp_path / "manifest.tsv"
        path.write_text(row + "\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_manifest(path, labels)

    def test_missing_file_and_bad_meta(self, tmp_path):
        labels = write_labels(tmp_path / "labels.tsv")
        with pytest.raises(DataError):
            load_manifest(tmp_path / "nope.tsv", labels)
        path = tmp_path / "manifest.tsv"
        path.write_text("# meta: {not json\na\tp\t0\ttest\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_manifest(path, labels)

    def test_write_read_round_trip_preserves_meta(self, tmp_path):
        labels = {0: "x", 1: "y"}
        manifest = ClipManifest(
            entries=(ClipEntry("a", "p/a", 0, "test"), ClipEntry("b", "p/b", 1, "test")),
            labels=labels,
            meta={"seed": 7, "spec": {"per_class": 1}},
        )
        path = write_manifest(manifest, tmp_path / "subset.tsv")
        loaded = load_manifest(path, labels)
        assert loaded.entries == manifest.entries
        assert loaded.meta == manifest.meta


class TestFrameSampling:
    @pytest.mark.parametrize("length,count", [(32, 16), (16, 16), (7, 16), (100, 3), (1, 4)])
    def test_floor_rule_oracle(self, length, count):
        indices = sample_frame_indices(length, count)
        expected = [int(np.floor(i * length / count)) for i in range(count)]
        np.testing.assert_array_equal(indices, expected)
        assert indices.min() >= 0 and indices.max() < length

    def test_short_clips_repeat_frames(self):
        indices = sample_frame_indices(4, 16)
        assert len(indices) == 16
        assert set(indices.tolist()) <= {0, 1, 2, 3}

    def test_errors(self):
        with pytest.raises(DataError):
            sample_frame_indices(0, 16)
        with pytest.raises(DataError):
            sample_frame_indices(16, 0)

    def test_sample_frames_gathers(self, rng):
        frames = rng.integers(0, 256, size=(10, 4, 4, 3), dtype=np.int64).astype(np.uint8)
        out = sample_frames(frames, 5)
        np.testing.assert_array_equal(out, frames[(np.arange(5) * 10) // 5])


class TestDecoders:
    def test_npz_and_npy(self, tmp_path, rng):
        frames = rng.integers(0, 256, size=(6, 8, 8, 3), dtype=np.int64).astype(np.uint8)
        npz = tmp_path / "clip.npz"
        np.savez(npz, frames=frames)
        np.testing.assert_array_equal(decode_npz(npz), frames)
        npy = tmp_path / "clip.npy"
        np.save(npy, frames)
        np.testing.assert_array_equal(decode_npy(npy), frames)

    def test_unit_floats_scaled_to_uint8(self, tmp_path):
        frames = np.full((2, 4, 4, 3), 0.5, dtype=np.float64)
        path = tmp_path / "float.npy"
        np.save(path, frames)
        out = decode_npy(path)
        assert out.dtype == np.uint8
        assert (out == 128).all()

    def test_single_frame_promoted(self, tmp_path):
        frame = np.zeros((4, 4, 3), dtype=np.uint8)
        path = tmp_path / "one.npy"
        np.save(path, frame)
        assert decode_npy(path).shape == (1, 4, 4, 3)

    def test_image_dir(self, tmp_path, rng):
        from PIL import Image

        clip_dir = tmp_path / "framedir"
        clip_dir.mkdir()
        frames = rng.integers(0, 256, size=(3, 8, 8, 3), dtype=np.int64).astype(np.uint8)
        for i, frame in enumerate(frames):
            Image.fromarray(frame).save(clip_dir / f"{i:03d}.png")
        out = DECODERS["image_dir"](clip_dir)
        np.testing.assert_array_equal(out, frames)
        with pytest.raises(DataError):
            DECODERS["image_dir"](tmp_path)  # no frames

    def test_load_clip(self, tmp_path, rng):
        frames = rng.integers(0, 256, size=(32, 8, 8, 3), dtype=np.int64).astype(np.uint8)
        (tmp_path / "clips").mkdir()
        np.savez(tmp_path / "clips" / "a.npz", frames=frames)
        entry = ClipEntry("a", "clips/a.npz", 2, "test")
        clip = load_clip(tmp_path, entry, decoder="npz", frame_count=16)
        assert clip.clip_id == "a" and clip.label == 2 and clip.frame_count == 16
        np.testing.assert_array_equal(clip.frames, frames[(np.arange(16) * 32) // 16])
        with pytest.raises(ConfigError):
            load_clip(tmp_path, entry, decoder="avi")
        with pytest.raises(DataError):
            load_clip(tmp_path, ClipEntry("b", "clips/b.npz", 0, "test"))


class TestStratifiedSubset:
    def make(self, per_class=6, n_classes=3):
        entries = []
        for c in range(n_classes):
            for i in range(per_class):
                entries.append(ClipEntry(f"c{c}_{i}", f"p/c{c}_{i}", c, "test"))
            entries.append(ClipEntry(f"c{c}_tr", f"p/c{c}_tr", c, "train"))
        labels = {c: f"act {c}" for c in range(n_classes)}
        return ClipManifest(entries=tuple(entries), labels=labels)

    def test_per_class_mode(self):
        manifest = self.make()
        subset = stratified_subset(manifest, per_class=2, seed=7)
        assert len(subset) == 6
        counts = subset.class_counts()
        assert counts == {0: 2, 1: 2, 2: 2}
        assert all(e.split == "test" for e in subset.entries)
        ids = [e.clip_id for e in subset.entries]
        assert ids == sorted(ids)
        rerun = stratified_subset(manifest, per_class=2, seed=7)
        assert rerun.entries == subset.entries
        other_seed = stratified_subset(manifest, per_class=4, seed=8)
        assert other_seed.entries != stratified_subset(manifest, per_class=4, seed=9).entries

    def test_total_mode_spreads_remainder(self):
        manifest = self.make()
        subset = stratified_subset(manifest, total=7, seed=3)
        assert len(subset) == 7
        counts = sorted(subset.class_counts().values())
        assert counts == [2, 2, 3]
        assert stratified_subset(manifest, total=7, seed=3).entries == subset.entries

    def test_class_restriction(self):
        manifest = self.make()
        subset = stratified_subset(manifest, classes=[0, 2], per_class=1)
        assert sorted(subset.class_counts()) == [0, 2]
        with pytest.raises(DataError):
            stratified_subset(manifest, classes=[0, 9], per_class=1)

    def test_errors(self):
        manifest = self.make(per_class=2)
        with pytest.raises(DataError):
            stratified_subset(manifest)
        with pytest.raises(DataError):
            stratified_subset(manifest, per_class=1, total=3)
        with pytest.raises(DataError) as err:
            stratified_subset(manifest, per_class=5)
        assert "short by 3" in str(err.value)
        with pytest.raises(DataError):
            stratified_subset(manifest, per_class=-1)
        empty = ClipManifest(entries=(), labels={0: "x"})
        with pytest.raises(DataError):
            stratified_subset(empty, per_class=1)

    def test_meta_records_sampling(self):
        subset = stratified_subset(self.make(), per_class=2, seed=11)
        assert subset.meta["seed"] == 11
        assert subset.meta["spec"] == {"per_class": 2}
        assert subset.meta["class_counts"] == {"0": 2, "1": 2, "2": 2}


class TestPretendSubset:
    def test_selects_only_pretend_classes(self, synth):
        manifest = load_manifest(synth["manifest"], synth["labels"])
        taxonomy = load_taxonomy(synth["taxonomy_dir"], manifest.labels)
        subset = pretend_subset(manifest, taxonomy)
        assert sorted(subset.class_counts()) == [2, 3]
        assert all(e.split == "test" for e in subset.entries)

    def test_empty_taxonomy_rejected(self, synth):
        manifest = load_manifest(synth["manifest"], synth["labels"])
        with pytest.raises(DataError):
            pretend_subset(manifest, ClassTaxonomy())


class TestTaxonomy:
    def test_bundled_files_load(self):
        taxonomy = load_taxonomy()
        assert set(taxonomy.semantic_tier.values()) <= set(TIERS)
        assert taxonomy.pretend_classes()
        for a, b in taxonomy.antonym.items():
            assert taxonomy.antonym[b] == a and a != b
        labels = load_labels(bundled_labels_path())
        assert set(taxonomy.semantic_tier) <= set(labels)

    def test_synthetic_taxonomy(self, synth):
        taxonomy = load_taxonomy(synth["taxonomy_dir"])
        assert taxonomy.pretend_classes() == [2, 3]
        assert taxonomy.antonym_of(0) == 1 and taxonomy.antonym_of(1) == 0
        assert taxonomy.antonym_of(3) is None
        assert taxonomy.tiers_present() == list(TIERS)
        assert taxonomy.tier_classes("different_verb") == [0, 3]
        with pytest.raises(DataError):
            taxonomy.tier_classes("verbs")

    def write_taxonomy(self, root, tiers="0\tdifferent_verb\n", pretend="1\tsmall\thigh\n", antonyms="0\t1\n"):
        root.mkdir(exist_ok=True)
        (root / "class_tiers.tsv").write_text(tiers, encoding="utf-8")
        (root / "pretend_classes.tsv").write_text(pretend, encoding="utf-8")
        (root / "antonym_pairs.tsv").write_text(antonyms, encoding="utf-8")
        return root

    def test_validation_errors(self, tmp_path):
        root = self.write_taxonomy(tmp_path / "t1", tiers="0\tnouns\n")
        with pytest.raises(DataError):
            load_taxonomy(root)
        root = self.write_taxonomy(tmp_path / "t2", tiers="0\tsame_verb\n0\tsame_verb\n")
        with pytest.raises(DataError):
            load_taxonomy(root)
        root = self.write_taxonomy(tmp_path / "t3", pretend="1\thuge\thigh\n")
        with pytest.raises(DataError):
            load_taxonomy(root)
        root = self.write_taxonomy(tmp_path / "t4", antonyms="0\t0\n")
        with pytest.raises(DataError):
            load_taxonomy(root)
        root = self.write_taxonomy(tmp_path / "t5", antonyms="0\t1\n0\t2\n")
        with pytest.raises(DataError):
            load_taxonomy(root)
        root = self.write_taxonomy(tmp_path / "t6")
        with pytest.raises(DataError):
            load_taxonomy(root, labels={0: "only"})  # class 1 unlabeled
        (root / "class_tiers.tsv").unlink()
        with pytest.raises(DataError):
            load_taxonomy(root)

    def test_bundled_dir_exists(self):
        assert bundled_data_dir().is_dir()


class TestSynthetic:
    def test_dataset_structure(self, synth):
        manifest = load_manifest(synth["manifest"], synth["labels"])
        assert len(manifest) == 16  # 4 classes x (2 train + 2 test)
        assert manifest.class_ids() == [0, 1, 2, 3]
        for split, expected in (("train", 8), ("test", 8)):
            assert len(manifest.for_split(split)) == expected
        entry = manifest.entries[0]
        clip = load_clip(synth["video_root"], entry)
        assert clip.frames.shape == (16, 64, 64, 3)
        assert clip.frames.dtype == np.uint8

    def test_clip_determinism_and_class_signal(self):
        a = synthetic_clip(0, "seed/x")
        b = synthetic_clip(0, "seed/x")
        np.testing.assert_array_equal(a, b)
        other_clip = synthetic_clip(0, "seed/y")
        assert not np.array_equal(a, other_clip)
        other_class = synthetic_clip(1, "seed/x")
        assert not np.array_equal(a, other_class)
        # frame order carries signal: frames are not all identical
        assert not np.array_equal(a[0], a[1])

    def test_min_classes(self, tmp_path):
        with pytest.raises(ValueError):
            make_synthetic_dataset(tmp_path / "bad", n_classes=1)
