"""End-to-end orchestration: config, axis runs, and report emission."""

from .axes import (
    dataset_fingerprint,
    encode_grid,
    extract_embeddings,
    grid_for_axis,
    load_dataset,
    run_all,
    run_axis,
    subset_for_axis,
    train_or_load_probes,
)
from .config import (
    AXES,
    config_hash,
    default_config,
    dump_resolved,
    load_config,
    resolve,
)
from .report import report

__all__ = [
    "AXES",
    "config_hash",
    "dataset_fingerprint",
    "default_config",
    "dump_resolved",
    "encode_grid",
    "extract_embeddings",
    "grid_for_axis",
    "load_config",
    "load_dataset",
    "report",
    "resolve",
    "run_all",
    "run_axis",
    "subset_for_axis",
    "train_or_load_probes",
]
