"""Deterministic toy encoder for desk-scale runs and tests.

Each frame is reduced to an 8x8 grid of channel block means, centred, and
pushed through a fixed seeded projection. A second projection mixes in the
difference to the previous frame, which makes the per-frame tokens depend on
frame order: a static clip yields identical tokens, while shuffling or
reversing frames moves the GAP vector. No weights are learned anywhere.
"""

import numpy as np

from .._util import generator_from
from ..dataset import VideoClip
from ..validation import check_clip
from .base import EmbeddingRecord, EncoderSpec, VideoEncoder, enforce_input_contract

_GRID = 8
_FEATURES = _GRID * _GRID * 3


def _block_means(frames: np.ndarray) -> np.ndarray:
    """Per-frame 8x8x3 block means, flattened to (T, 192) in [0, 1]."""
    t, h, w, _ = frames.shape
    row_map = (np.arange(h) * _GRID) // h
    col_map = (np.arange(w) * _GRID) // w
    cell = row_map[:, None] * _GRID + col_map[None, :]
    counts = np.bincount(cell.ravel(), minlength=_GRID * _GRID).astype(np.float64)
    flat = frames.reshape(t, h * w, 3).astype(np.float64)
    sums = np.zeros((t, _GRID * _GRID, 3))
    np.add.at(sums, (slice(None), cell.ravel()), flat)
    means = sums / counts[None, :, None]
    return means.reshape(t, _FEATURES) / 255.0


class ToyEncoder(VideoEncoder):
    """Seeded random-projection encoder with first-difference mixing."""

    def __init__(self, dim: int = 64, seed: int = 0, mixing_scale: float = 0.5):
        self._spec = EncoderSpec(
            encoder_id=f"toy-d{int(dim)}-s{int(seed)}",
            embed_dim=int(dim),
            input_frames=None,
            input_resolution=None,
            token_layout="flat",
            provenance="seeded random projection of block means, no weights",
        )
        scale = 1.0 / np.sqrt(_FEATURES)
        rng_p = generator_from("toy-encoder", int(seed), "projection")
        rng_m = generator_from("toy-encoder", int(seed), "mixing")
        self._projection = rng_p.standard_normal((_FEATURES, int(dim))) * scale
        self._mixing = rng_m.standard_normal((_FEATURES, int(dim))) * scale
        self._mixing_scale = float(mixing_scale)

    @property
    def spec(self) -> EncoderSpec:
        return self._spec

    def encode(self, clip: VideoClip, perturbation_key: str = "") -> EmbeddingRecord:
        frames = check_clip(clip.frames)
        enforce_input_contract(self._spec, frames)
        z = _block_means(frames) - 0.5
        prev = np.vstack([z[:1], z[:-1]])
        tokens = z @ self._projection + self._mixing_scale * ((z - prev) @ self._mixing)
        tokens = tokens.astype(np.float32)
        return EmbeddingRecord(
            clip_id=clip.clip_id,
            encoder_id=self._spec.encoder_id,
            perturbation_key=perturbation_key,
            gap_vector=tokens.mean(axis=0),
            token_features=tokens,
        )


def toy_encode(
    clip: VideoClip, dim: int = 64, seed: int = 0, perturbation_key: str = ""
) -> EmbeddingRecord:
    """One-shot convenience wrapper around ToyEncoder."""
    return ToyEncoder(dim=dim, seed=seed).encode(clip, perturbation_key)
