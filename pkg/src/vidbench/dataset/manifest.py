"""Manifest ingestion and stratified subset construction.

The manifest is a UTF-8 text table, one clip per line:
``clip_id<TAB>relative_path<TAB>class_id<TAB>split``. Lines starting with
``#`` are comments; a single ``# meta: {...}`` comment may carry sampling
metadata for materialised subsets.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .._util import generator_from
from ..errors import DataError

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ClipEntry:
    clip_id: str
    path: str
    class_id: int
    split: str


@dataclass(frozen=True)
class ClipManifest:
    entries: tuple
    labels: dict
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def class_ids(self) -> list:
        return sorted({e.class_id for e in self.entries})

    def for_split(self, split: str) -> list:
        if split not in SPLITS:
            raise DataError(f"unknown split {split!r}, expected one of {SPLITS}")
        return [e for e in self.entries if e.split == split]

    def by_class(self, split: str | None = None) -> dict:
        entries = self.entries if split is None else self.for_split(split)
        grouped: dict = {}
        for entry in entries:
            grouped.setdefault(entry.class_id, []).append(entry)
        for clips in grouped.values():
            clips.sort(key=lambda e: e.clip_id)
        return grouped

    def class_counts(self) -> dict:
        counts: dict = {}
        for entry in self.entries:
            counts[entry.class_id] = counts.get(entry.class_id, 0) + 1
        return counts

    def content_hash(self) -> str:
        """Stable hash of the manifest content, used in cache keys."""
        h = hashlib.sha256()
        for e in sorted(self.entries, key=lambda e: e.clip_id):
            h.update(f"{e.clip_id}\t{e.path}\t{e.class_id}\t{e.split}\n".encode("utf-8"))
        return h.hexdigest()[:16]


def load_labels(path) -> dict:
    """Load a ``class_id<TAB>label`` file covering a dense id range 0..K-1."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"labels file not found: {path}")
    labels: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected 2 tab-separated fields, got {len(parts)}")
        id_text, label = parts
        try:
            class_id = int(id_text)
        except ValueError:
            raise DataError(f"{path}:{lineno}: class id {id_text!r} is not an integer") from None
        if class_id in labels:
            raise DataError(f"{path}:{lineno}: duplicate class id {class_id}")
        if not label.strip():
            raise DataError(f"{path}:{lineno}: empty label")
        labels[class_id] = label.strip()
    if not labels:
        raise DataError(f"labels file is empty: {path}")
    expected = set(range(len(labels)))
    if set(labels) != expected:
        missing = sorted(expected - set(labels))[:5]
        raise DataError(f"labels file must cover ids 0..{len(labels) - 1} densely; missing {missing}")
    return labels


def load_manifest(path, labels) -> ClipManifest:
    """Parse and validate a manifest file against a label map.

    ``labels`` may be a path to a labels file or an already-loaded id->label
    dict. Duplicate clip ids, unknown classes, and unknown splits are data
    errors reported with their line number.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest file not found: {path}")
    if not isinstance(labels, dict):
        labels = load_labels(labels)

    entries = []
    seen: set = set()
    meta: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            stripped = line.lstrip()[1:].strip()
            if stripped.startswith("meta:"):
                try:
                    meta = json.loads(stripped[len("meta:"):])
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: malformed meta comment: {exc}") from None
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise DataError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
        clip_id, rel_path, class_text, split = (p.strip() for p in parts)
        if not clip_id:
            raise DataError(f"{path}:{lineno}: empty clip_id")
        if clip_id in seen:
            raise DataError(f"{path}:{lineno}: duplicate clip_id {clip_id!r}")
        seen.add(clip_id)
        try:
            class_id = int(class_text)
        except ValueError:
            raise DataError(f"{path}:{lineno}: class id {class_text!r} is not an integer") from None
        if class_id not in labels:
            raise DataError(f"{path}:{lineno}: unknown class id {class_id} (no label defined)")
        if split not in SPLITS:
            raise DataError(f"{path}:{lineno}: unknown split {split!r}, expected one of {SPLITS}")
        entries.append(ClipEntry(clip_id, rel_path, class_id, split))
    return ClipManifest(entries=tuple(entries), labels=dict(labels), meta=meta)


def write_manifest(manifest: ClipManifest, path) -> Path:
    """Write a manifest with its sampling metadata as a parseable comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# clip_id\trelative_path\tclass_id\tsplit"]
    if manifest.meta:
        lines.append("# meta: " + json.dumps(manifest.meta, sort_keys=True))
    for e in manifest.entries:
        lines.append(f"{e.clip_id}\t{e.path}\t{e.class_id}\t{e.split}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _select_per_class(by_class: dict, class_id: int, count: int, seed: int) -> list:
    clips = by_class.get(class_id, [])
    if len(clips) < count:
        raise DataError(
            f"class {class_id} has {len(clips)} clips, need {count} (short by {count - len(clips)})"
        )
    rng = generator_from(seed, "subset", class_id)
    order = rng.permutation(len(clips))[:count]
    return [clips[i] for i in sorted(order)]


def stratified_subset(
    manifest: ClipManifest,
    classes=None,
    per_class: int | None = None,
    total: int | None = None,
    split: str = "test",
    seed: int = 42,
) -> ClipManifest:
    """Build a seeded, class-stratified subset of one split.

    Exactly one of ``per_class`` (same count for every requested class) or
    ``total`` (spread as evenly as the class count allows: floor(total/K) per
    class plus one extra clip for a seeded choice of the remainder classes)
    must be given. Sampling is a pure function of (manifest, spec, seed).
    """
    if (per_class is None) == (total is None):
        raise DataError("specify exactly one of per_class or total")
    by_class = manifest.by_class(split)
    if classes is None:
        classes = sorted(by_class)
    else:
        classes = sorted(int(c) for c in classes)
        missing = [c for c in classes if c not in manifest.labels]
        if missing:
            raise DataError(f"requested classes not in label map: {missing}")
    if not classes:
        raise DataError(f"no classes available in split {split!r}")

    counts: dict = {}
    if per_class is not None:
        if per_class < 0:
            raise DataError("per_class must be non-negative")
        counts = {c: per_class for c in classes}
        mode = {"per_class": per_class}
    else:
        if total < 0:
            raise DataError("total must be non-negative")
        base, remainder = divmod(total, len(classes))
        counts = {c: base for c in classes}
        rng = generator_from(seed, "subset-remainder")
        extras = rng.permutation(len(classes))[:remainder]
        for idx in sorted(extras):
            counts[classes[idx]] += 1
        mode = {"total": total}

    selected = []
    for class_id in classes:
        if counts[class_id] == 0:
            continue
        selected.extend(_select_per_class(by_class, class_id, counts[class_id], seed))
    selected.sort(key=lambda e: (e.class_id, e.clip_id))
    meta = {
        "seed": seed,
        "split": split,
        "spec": mode,
        "class_counts": {str(c): counts[c] for c in classes if counts[c] > 0},
    }
    return ClipManifest(entries=tuple(selected), labels=dict(manifest.labels), meta=meta)


def pretend_subset(manifest: ClipManifest, taxonomy, split: str = "test") -> ClipManifest:
    """All and only clips of the taxonomy's pretend classes in one split."""
    pretend_ids = sorted(taxonomy.pretend_classes())
    if not pretend_ids:
        raise DataError("taxonomy defines no pretend classes")
    keep = set(pretend_ids)
    selected = [e for e in manifest.for_split(split) if e.class_id in keep]
    selected.sort(key=lambda e: (e.class_id, e.clip_id))
    counts: dict = {}
    for e in selected:
        counts[str(e.class_id)] = counts.get(str(e.class_id), 0) + 1
    meta = {"split": split, "spec": {"pretend_classes": len(pretend_ids)}, "class_counts": counts}
    return ClipManifest(entries=tuple(selected), labels=dict(manifest.labels), meta=meta)
