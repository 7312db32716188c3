"""Dataset ingestion: manifests, decoding, frame sampling, taxonomy, subsets."""

from .frames import (
    DECODERS,
    VideoClip,
    load_clip,
    sample_frame_indices,
    sample_frames,
)
from .manifest import (
    SPLITS,
    ClipEntry,
    ClipManifest,
    load_labels,
    load_manifest,
    pretend_subset,
    stratified_subset,
    write_manifest,
)
from .synthetic import make_synthetic_dataset, synthetic_clip
from .taxonomy import (
    OBJECT_SIZES,
    SENSITIVITIES,
    TIERS,
    ClassTaxonomy,
    bundled_data_dir,
    bundled_labels_path,
    load_taxonomy,
)

__all__ = [
    "DECODERS",
    "SPLITS",
    "TIERS",
    "OBJECT_SIZES",
    "SENSITIVITIES",
    "ClipEntry",
    "ClipManifest",
    "ClassTaxonomy",
    "VideoClip",
    "bundled_data_dir",
    "bundled_labels_path",
    "load_clip",
    "load_labels",
    "load_manifest",
    "load_taxonomy",
    "make_synthetic_dataset",
    "pretend_subset",
    "sample_frame_indices",
    "sample_frames",
    "stratified_subset",
    "synthetic_clip",
    "write_manifest",
]
