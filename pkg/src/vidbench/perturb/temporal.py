"""Ten temporal conditions in four families: shuffle, static, noise, reversal."""

import numpy as np

from ..errors import ConfigError
from ..validation import check_clip
from .spec import TEMPORAL_CONDITIONS

# family membership used by the temporal-dependency aggregation
TEMPORAL_FAMILIES = {
    "shuffle": ("random_shuffle", "segment_shuffle", "interleave"),
    "static": ("static_first", "static_middle", "static_last"),
    "noise": ("gaussian_noise", "uniform_noise", "static_gaussian_noise"),
    "reversal": ("reversal",),
}

NOISE_SIGMA_FRACTION = 0.5  # of the uint8 value range, zero-mean, clipped


def interleave_order(count: int, depth: int = 2) -> np.ndarray:
    """Even indices then odd indices, applied recursively to ``depth``."""
    def split(indices: np.ndarray, level: int) -> np.ndarray:
        if level == 0 or indices.size <= 2:
            return indices
        return np.concatenate([split(indices[0::2], level - 1), split(indices[1::2], level - 1)])

    return split(np.arange(count, dtype=np.int64), depth)


def segment_shuffle_order(count: int, segments: int, rng: np.random.Generator) -> np.ndarray:
    parts = np.array_split(np.arange(count, dtype=np.int64), segments)
    order = rng.permutation(len(parts))
    return np.concatenate([parts[i] for i in order])


def apply_temporal_condition(
    clip: np.ndarray,
    condition: str,
    rng: np.random.Generator,
    segments: int = 4,
    interleave_depth: int = 2,
) -> np.ndarray:
    clip = check_clip(clip)
    if condition not in TEMPORAL_CONDITIONS:
        raise ConfigError(
            f"unknown temporal condition {condition!r}, expected one of {TEMPORAL_CONDITIONS}"
        )
    t_count = clip.shape[0]

    if condition == "reversal":
        return clip[::-1].copy()
    if condition == "random_shuffle":
        return clip[rng.permutation(t_count)].copy()
    if condition == "segment_shuffle":
        return clip[segment_shuffle_order(t_count, segments, rng)].copy()
    if condition == "interleave":
        return clip[interleave_order(t_count, interleave_depth)].copy()
    if condition in ("static_first", "static_middle", "static_last"):
        anchor = {"static_first": 0, "static_middle": t_count // 2, "static_last": t_count - 1}
        return np.broadcast_to(clip[anchor[condition]], clip.shape).copy()
    if condition == "gaussian_noise":
        noise = rng.normal(0.0, NOISE_SIGMA_FRACTION * 255.0, size=clip.shape)
        return np.clip(np.rint(noise), 0, 255).astype(np.uint8)
    if condition == "static_gaussian_noise":
        frame = rng.normal(0.0, NOISE_SIGMA_FRACTION * 255.0, size=clip.shape[1:])
        frame = np.clip(np.rint(frame), 0, 255).astype(np.uint8)
        return np.broadcast_to(frame, clip.shape).copy()
    # uniform_noise
    return rng.integers(0, 256, size=clip.shape, dtype=np.int64).astype(np.uint8)
