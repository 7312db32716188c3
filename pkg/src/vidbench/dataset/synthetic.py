"""Seeded synthetic dataset generation for desk-scale runs and tests."""

from pathlib import Path

import numpy as np

from .._util import generator_from

_TIER_CYCLE = ("different_verb", "same_verb", "pretend_vs_real")


def synthetic_clip(class_id: int, clip_seed, frames: int = 16, height: int = 64, width: int = 64) -> np.ndarray:
    """One clip whose motion pattern depends on its class.

    A bright bar sweeps the frame with class-dependent orientation and speed
    over a class-dependent background gradient, plus seeded pixel noise, so
    classes are partially separable by any reasonable encoder and frame order
    carries signal.
    """
    rng = generator_from("synthetic-clip", class_id, clip_seed)
    horizontal = class_id % 2 == 0
    speed = 1 + (class_id % 3)
    phase = int(rng.integers(0, max(height, width)))
    base = np.linspace(30 + 10 * (class_id % 7), 90 + 10 * (class_id % 5), height, dtype=np.float64)
    clip = np.empty((frames, height, width, 3), dtype=np.uint8)
    for t in range(frames):
        frame = np.repeat(base[:, None], width, axis=1)
        frame = np.stack([frame, np.flipud(frame), 0.5 * frame + 40.0], axis=-1)
        extent = height if horizontal else width
        pos = (phase + speed * t * 3) % extent
        thickness = 4 + (class_id % 4)
        lo, hi = pos, min(pos + thickness, extent)
        if horizontal:
            frame[lo:hi, :, :] = 220.0
        else:
            frame[:, lo:hi, :] = 220.0
        noise = rng.normal(0.0, 6.0, size=frame.shape)
        clip[t] = np.clip(np.rint(frame + noise), 0, 255).astype(np.uint8)
    return clip


def make_synthetic_dataset(
    root,
    n_classes: int = 4,
    train_per_class: int = 2,
    test_per_class: int = 2,
    frames: int = 16,
    height: int = 64,
    width: int = 64,
    seed: int = 42,
) -> dict:
    """Materialise a complete synthetic dataset under ``root``.

    Writes clip archives (``clips/<clip_id>.npz``), a labels file, a manifest,
    and a matching taxonomy (tiers cycle through the three semantic tiers;
    the last two classes are the pretend group; classes 0 and 1 form an
    antonym pair). Returns the written paths.
    """
    root = Path(root)
    clips_dir = root / "clips"
    clips_dir.mkdir(parents=True, exist_ok=True)
    taxonomy_dir = root / "taxonomy"
    taxonomy_dir.mkdir(parents=True, exist_ok=True)
    if n_classes < 2:
        raise ValueError("synthetic dataset needs at least 2 classes")

    manifest_rows = []
    for class_id in range(n_classes):
        for split, per_class in (("train", train_per_class), ("test", test_per_class)):
            for i in range(per_class):
                clip_id = f"c{class_id:03d}_{split}_{i:03d}"
                clip = synthetic_clip(class_id, f"{seed}/{clip_id}", frames, height, width)
                rel = f"clips/{clip_id}.npz"
                np.savez_compressed(root / rel, frames=clip)
                manifest_rows.append(f"{clip_id}\t{rel}\t{class_id}\t{split}")

    labels_path = root / "labels.tsv"
    labels_path.write_text(
        "\n".join(f"{c}\tsynthetic action {c}" for c in range(n_classes)) + "\n", encoding="utf-8"
    )
    manifest_path = root / "manifest.tsv"
    manifest_path.write_text(
        "# clip_id\trelative_path\tclass_id\tsplit\n" + "\n".join(manifest_rows) + "\n",
        encoding="utf-8",
    )

    tiers = [f"{c}\t{_TIER_CYCLE[c % 3]}" for c in range(n_classes)]
    (taxonomy_dir / "class_tiers.tsv").write_text("\n".join(tiers) + "\n", encoding="utf-8")
    pretend_ids = [n_classes - 2, n_classes - 1]
    pretend_rows = [
        f"{pretend_ids[0]}\tsmall\thigh",
        f"{pretend_ids[1]}\tmedium\tlow",
    ]
    (taxonomy_dir / "pretend_classes.tsv").write_text("\n".join(pretend_rows) + "\n", encoding="utf-8")
    (taxonomy_dir / "antonym_pairs.tsv").write_text("0\t1\n", encoding="utf-8")

    return {
        "root": root,
        "manifest": manifest_path,
        "labels": labels_path,
        "taxonomy_dir": taxonomy_dir,
        "video_root": root,
    }
