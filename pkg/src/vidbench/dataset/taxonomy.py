"""Class taxonomy: semantic tiers, pretend categories, and the antonym map.

Three editable tab-separated data files ship with the package and can be
swapped per dataset: ``class_tiers.tsv`` (class_id -> tier),
``pretend_classes.tsv`` (class_id -> object size, detail sensitivity), and
``antonym_pairs.tsv`` (class_id -> class_id, one pair per line, either
direction). The bundled files cover the standard 174-class label set.
"""

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..errors import DataError

TIERS = ("different_verb", "same_verb", "pretend_vs_real")
OBJECT_SIZES = ("small", "medium", "large")
SENSITIVITIES = ("high", "low")


@dataclass(frozen=True)
class ClassTaxonomy:
    semantic_tier: dict = field(default_factory=dict)
    object_size: dict = field(default_factory=dict)
    detail_sensitivity: dict = field(default_factory=dict)
    antonym: dict = field(default_factory=dict)

    def pretend_classes(self) -> list:
        return sorted(self.object_size)

    def tier_classes(self, tier: str | None = None) -> list:
        if tier is None:
            return sorted(self.semantic_tier)
        if tier not in TIERS:
            raise DataError(f"unknown tier {tier!r}, expected one of {TIERS}")
        return sorted(c for c, t in self.semantic_tier.items() if t == tier)

    def antonym_of(self, class_id: int):
        return self.antonym.get(int(class_id))

    def tiers_present(self) -> list:
        present = set(self.semantic_tier.values())
        return [t for t in TIERS if t in present]


def _read_rows(path: Path, n_fields: int) -> list:
    if not path.is_file():
        raise DataError(f"taxonomy file not found: {path}")
    rows = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != n_fields:
            raise DataError(f"{path}:{lineno}: expected {n_fields} tab-separated fields, got {len(parts)}")
        try:
            parsed = [int(parts[0])] + [p.strip() for p in parts[1:]]
        except ValueError:
            raise DataError(f"{path}:{lineno}: class id {parts[0]!r} is not an integer") from None
        rows.append((lineno, parsed))
    return rows


def load_taxonomy(data_dir=None, labels: dict | None = None) -> ClassTaxonomy:
    """Load the three taxonomy files from ``data_dir`` (default: bundled).

    When ``labels`` is given, every referenced class id must have a label.
    The antonym map is validated symmetric and irreflexive after mirroring.
    """
    if data_dir is None:
        data_dir = bundled_data_dir()
    data_dir = Path(data_dir)

    def check_known(class_id: int, path: Path, lineno: int):
        if labels is not None and class_id not in labels:
            raise DataError(f"{path}:{lineno}: class id {class_id} has no label")

    tiers: dict = {}
    path = data_dir / "class_tiers.tsv"
    for lineno, (class_id, tier) in _read_rows(path, 2):
        check_known(class_id, path, lineno)
        if tier not in TIERS:
            raise DataError(f"{path}:{lineno}: unknown tier {tier!r}")
        if class_id in tiers:
            raise DataError(f"{path}:{lineno}: duplicate tier assignment for class {class_id}")
        tiers[class_id] = tier

    sizes: dict = {}
    sensitivities: dict = {}
    path = data_dir / "pretend_classes.tsv"
    for lineno, (class_id, size, sensitivity) in _read_rows(path, 3):
        check_known(class_id, path, lineno)
        if size not in OBJECT_SIZES:
            raise DataError(f"{path}:{lineno}: unknown object size {size!r}")
        if sensitivity not in SENSITIVITIES:
            raise DataError(f"{path}:{lineno}: unknown detail sensitivity {sensitivity!r}")
        if class_id in sizes:
            raise DataError(f"{path}:{lineno}: duplicate pretend assignment for class {class_id}")
        sizes[class_id] = size
        sensitivities[class_id] = sensitivity

    antonym: dict = {}
    path = data_dir / "antonym_pairs.tsv"
    for lineno, (a, b_text) in _read_rows(path, 2):
        try:
            b = int(b_text)
        except ValueError:
            raise DataError(f"{path}:{lineno}: class id {b_text!r} is not an integer") from None
        check_known(a, path, lineno)
        check_known(b, path, lineno)
        if a == b:
            raise DataError(f"{path}:{lineno}: antonym pair must be irreflexive, got {a}<->{b}")
        for x, y in ((a, b), (b, a)):
            if antonym.get(x, y) != y:
                raise DataError(
                    f"{path}:{lineno}: conflicting antonym for class {x}: {antonym[x]} vs {y}"
                )
            antonym[x] = y

    return ClassTaxonomy(
        semantic_tier=tiers,
        object_size=sizes,
        detail_sensitivity=sensitivities,
        antonym=antonym,
    )


def bundled_data_dir() -> Path:
    return Path(resources.files("vidbench.dataset") / "data")


def bundled_labels_path() -> Path:
    return bundled_data_dir() / "labels.tsv"
