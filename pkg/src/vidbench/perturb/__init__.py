"""Video perturbations: pixel corruptions, occlusions, and temporal edits.

Every transform consumes a (T, H, W, 3) uint8 clip and returns a new array of
the same shape and dtype. Randomised transforms draw from a generator seeded
by the perturbation key and the clip id, so a given (spec, clip) pair always
produces the same output regardless of batch order or worker count.
"""

import numpy as np

from .._util import generator_from, stable_seed
from ..errors import ConfigError
from ..validation import check_clip
from .corruptions import CORRUPTION_TYPES, corrupt_clip
from .occlusion import (
    GREY,
    apply_moving_block,
    apply_patch_dropout,
    apply_temporal_dropout,
)
from .preview import render_preview
from .spec import (
    CORRUPTION_SEVERITIES,
    DEFAULT_CUBOID,
    FAMILIES,
    MOVING_BLOCK_RATIOS,
    OCCLUSION_CONDITIONS,
    PATCH_DROPOUT_RATIOS,
    TEMPORAL_DROPOUT_RATIOS,
    PerturbationSpec,
    format_severity,
    parse_key,
)
from .temporal import (
    TEMPORAL_CONDITIONS,
    TEMPORAL_FAMILIES,
    apply_temporal_condition,
    interleave_order,
    segment_shuffle_order,
)

__all__ = [
    "CORRUPTION_SEVERITIES",
    "CORRUPTION_TYPES",
    "DEFAULT_CUBOID",
    "FAMILIES",
    "GREY",
    "MOVING_BLOCK_RATIOS",
    "OCCLUSION_CONDITIONS",
    "PATCH_DROPOUT_RATIOS",
    "TEMPORAL_CONDITIONS",
    "TEMPORAL_DROPOUT_RATIOS",
    "TEMPORAL_FAMILIES",
    "PerturbationSpec",
    "apply",
    "apply_moving_block",
    "apply_patch_dropout",
    "apply_temporal_condition",
    "apply_temporal_dropout",
    "corrupt_clip",
    "corruption_grid",
    "format_severity",
    "interleave_order",
    "occlusion_grid",
    "parse_key",
    "render_preview",
    "segment_shuffle_order",
    "temporal_grid",
]


def apply(spec: PerturbationSpec, clip: np.ndarray, clip_id: str = "") -> np.ndarray:
    """Apply ``spec`` to ``clip`` deterministically for the given clip id."""
    clip = check_clip(clip)
    if spec.family == "clean":
        return clip.copy()
    if spec.family == "corruption":
        return corrupt_clip(
            clip,
            spec.condition,
            int(spec.severity),
            seed=stable_seed(spec.key(), clip_id),
        )
    rng = generator_from(spec.key(), clip_id)
    if spec.family == "occlusion":
        if spec.condition == "moving_block":
            return apply_moving_block(clip, spec.severity)
        if spec.condition == "temporal_dropout":
            return apply_temporal_dropout(clip, spec.severity, rng)
        return apply_patch_dropout(
            clip,
            spec.severity,
            cuboid=spec.param("cuboid", DEFAULT_CUBOID),
            rng=rng,
            allow_partial=bool(spec.param("allow_partial", True)),
        )
    if spec.family == "temporal":
        return apply_temporal_condition(clip, spec.condition, rng)
    raise ConfigError(f"unsupported perturbation family: {spec.family!r}")


def corruption_grid(seed: int, types=CORRUPTION_TYPES, severities=CORRUPTION_SEVERITIES):
    """Full corruption condition grid at the given seed."""
    return [
        PerturbationSpec("corruption", t, severity=int(s), seed=seed)
        for t in types
        for s in severities
    ]


def occlusion_grid(
    seed: int,
    block_ratios=MOVING_BLOCK_RATIOS,
    dropout_ratios=TEMPORAL_DROPOUT_RATIOS,
    patch_ratios=PATCH_DROPOUT_RATIOS,
):
    """Full occlusion condition grid at the given seed."""
    specs = [
        PerturbationSpec("occlusion", "moving_block", severity=float(r), seed=seed)
        for r in block_ratios
    ]
    specs += [
        PerturbationSpec("occlusion", "temporal_dropout", severity=float(r), seed=seed)
        for r in dropout_ratios
    ]
    specs += [
        PerturbationSpec("occlusion", "patch_dropout", severity=float(r), seed=seed)
        for r in patch_ratios
    ]
    return specs


def temporal_grid(seed: int, conditions=TEMPORAL_CONDITIONS):
    """Full temporal condition grid at the given seed."""
    return [PerturbationSpec("temporal", c, seed=seed) for c in conditions]
