"""Occlusion paradigms: moving block, temporal dropout, patch dropout."""

import numpy as np

from ..errors import ConfigError
from ..validation import check_clip

GREY = 128


def apply_moving_block(clip: np.ndarray, alpha: float) -> np.ndarray:
    """Sweep a mid-grey square along the main diagonal over the clip.

    In frame t the square of side round(alpha * min(H, W)) sits at the
    position linearly interpolated from top-left (t=0) to bottom-right
    (t=T-1); everything outside the square is untouched.
    """
    clip = check_clip(clip)
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"moving-block ratio must be in [0,1], got {alpha}")
    t_count, h, w, _ = clip.shape
    side = int(round(alpha * min(h, w)))
    out = clip.copy()
    if side == 0:
        return out
    for t in range(t_count):
        frac = t / (t_count - 1) if t_count > 1 else 0.0
        row = int(round(frac * (h - side)))
        col = int(round(frac * (w - side)))
        out[t, row : row + side, col : col + side, :] = GREY
    return out


def apply_temporal_dropout(clip: np.ndarray, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Freeze a contiguous block of floor(beta*T) frames.

    The block start is seeded-uniform over positions >= 1 so a preceding
    visible frame always exists; every frame in the block becomes a copy of
    that frame. Frames outside the block are bit-identical to the input.
    """
    clip = check_clip(clip)
    if not 0.0 <= beta < 1.0:
        raise ConfigError(f"temporal-dropout ratio must be in [0,1), got {beta}")
    t_count = clip.shape[0]
    length = int(beta * t_count)
    out = clip.copy()
    if length == 0:
        return out
    start = int(rng.integers(1, t_count - length + 1))
    out[start : start + length] = clip[start - 1]
    return out


def apply_patch_dropout(
    clip: np.ndarray,
    gamma: float,
    cuboid: tuple = (2, 16, 16),
    rng: np.random.Generator | None = None,
    allow_partial: bool = False,
) -> np.ndarray:
    """Zero a seeded sample of round(gamma * n_cuboids) spatiotemporal cuboids.

    The T x H x W volume is partitioned into cuboids of shape
    (tau, p, p); with ``allow_partial`` the trailing cells may be ragged,
    otherwise non-divisible shapes are rejected.
    """
    clip = check_clip(clip)
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError(f"patch-dropout ratio must be in [0,1], got {gamma}")
    tau, ph, pw = (int(v) for v in cuboid)
    if tau < 1 or ph < 1 or pw < 1:
        raise ConfigError(f"cuboid dims must be positive, got {cuboid}")
    t_count, h, w, _ = clip.shape
    if not allow_partial and (t_count % tau or h % ph or w % pw):
        raise ConfigError(
            f"clip shape ({t_count},{h},{w}) not divisible by cuboid ({tau},{ph},{pw}); "
            "enable partial cuboids to pad instead"
        )
    nt = -(-t_count // tau)
    nh = -(-h // ph)
    nw = -(-w // pw)
    count = nt * nh * nw
    zero_count = int(round(gamma * count))
    out = clip.copy()
    if zero_count == 0:
        return out
    if rng is None:
        raise ConfigError("patch dropout requires a seeded generator")
    chosen = rng.choice(count, size=zero_count, replace=False)
    for index in np.sort(chosen):
        it, rem = divmod(int(index), nh * nw)
        ih, iw = divmod(rem, nw)
        out[
            it * tau : min((it + 1) * tau, t_count),
            ih * ph : min((ih + 1) * ph, h),
            iw * pw : min((iw + 1) * pw, w),
            :,
        ] = 0
    return out
