"""Encoder adapter interface and registry.

Adapters wrap frozen video backbones behind one calling convention: clip in,
token features and a GAP vector out. Each adapter declares its own input
contract (frame count, resolution) and does its own preprocessing, so the
harness core stays model-agnostic. Third-party adapters register through the
``vidbench.encoders`` entry-point group.
"""

import abc
from dataclasses import dataclass, field
from importlib import metadata as _metadata

import numpy as np

from ..dataset import VideoClip
from ..errors import ConfigError, DataError

ENTRY_POINT_GROUP = "vidbench.encoders"

GAP_TOLERANCE = 1e-5


@dataclass(frozen=True)
class EncoderSpec:
    """Static description of one encoder adapter."""

    encoder_id: str
    embed_dim: int
    input_frames: int | None = None
    input_resolution: int | None = None
    token_layout: tuple | str = "flat"
    provenance: str = ""

    def __post_init__(self):
        if not self.encoder_id:
            raise ConfigError("encoder_id must be non-empty")
        if int(self.embed_dim) < 1:
            raise ConfigError(f"embed_dim must be >= 1, got {self.embed_dim}")
        object.__setattr__(self, "embed_dim", int(self.embed_dim))


@dataclass(frozen=True)
class EmbeddingRecord:
    """One encoded clip under one perturbation condition.

    ``gap_vector`` is the arithmetic mean of ``token_features`` when tokens
    are present; some backbones expose only the pooled output, in which case
    ``token_features`` is None.
    """

    clip_id: str
    encoder_id: str
    perturbation_key: str
    gap_vector: np.ndarray
    token_features: np.ndarray | None = field(default=None)

    def __post_init__(self):
        gap = np.asarray(self.gap_vector)
        if gap.ndim != 1:
            raise DataError(f"gap_vector must be 1-dimensional, got shape {gap.shape}")
        if not np.isfinite(gap).all():
            raise DataError("gap_vector contains non-finite values")
        object.__setattr__(self, "gap_vector", gap)
        if self.token_features is not None:
            tokens = np.asarray(self.token_features)
            if tokens.ndim != 2:
                raise DataError(
                    f"token_features must be (n_tokens, dim), got shape {tokens.shape}"
                )
            if tokens.shape[1] != gap.shape[0]:
                raise DataError(
                    f"token dim {tokens.shape[1]} does not match gap dim {gap.shape[0]}"
                )
            if not np.isfinite(tokens).all():
                raise DataError("token_features contain non-finite values")
            mean = tokens.mean(axis=0)
            if np.max(np.abs(mean - gap.astype(mean.dtype))) > GAP_TOLERANCE:
                raise DataError(
                    "gap_vector deviates from the token mean by more than "
                    f"{GAP_TOLERANCE:g}"
                )
            object.__setattr__(self, "token_features", tokens)

    @property
    def dim(self) -> int:
        return int(self.gap_vector.shape[0])

    @property
    def n_tokens(self) -> int:
        return 0 if self.token_features is None else int(self.token_features.shape[0])


class VideoEncoder(abc.ABC):
    """Frozen encoder adapter.

    Subclasses are immutable after construction; ``encode`` must be
    deterministic and reentrant so callers may share one instance across
    workers.
    """

    @property
    @abc.abstractmethod
    def spec(self) -> EncoderSpec: ...

    @property
    def encoder_id(self) -> str:
        return self.spec.encoder_id

    @property
    def embed_dim(self) -> int:
        return self.spec.embed_dim

    @abc.abstractmethod
    def encode(self, clip: VideoClip, perturbation_key: str = "") -> EmbeddingRecord:
        """Encode one clip. Never mutates the input frames."""


def enforce_input_contract(spec: EncoderSpec, frames: np.ndarray) -> None:
    """Raise DataError when a clip violates the adapter's declared contract.

    A None field means the adapter accepts any value on that axis.
    """
    t, h, w = frames.shape[0], frames.shape[1], frames.shape[2]
    if spec.input_frames is not None and t != spec.input_frames:
        raise DataError(
            f"{spec.encoder_id} expects {spec.input_frames} frames, got {t}"
        )
    if spec.input_resolution is not None and (h, w) != (
        spec.input_resolution,
        spec.input_resolution,
    ):
        raise DataError(
            f"{spec.encoder_id} expects {spec.input_resolution}x"
            f"{spec.input_resolution} input, got {h}x{w}"
        )


_REGISTRY: dict = {}


def register_encoder(name: str, factory) -> None:
    """Register an adapter constructor under ``name``.

    ``factory(**options) -> VideoEncoder``. Re-registering a name replaces
    the previous factory; this keeps desk tests able to shadow built-ins.
    """
    if not name:
        raise ConfigError("encoder name must be non-empty")
    _REGISTRY[name] = factory


def _load_entry_points() -> None:
    try:
        points = _metadata.entry_points(group=ENTRY_POINT_GROUP)
    except Exception:
        return
    for point in points:
        if point.name in _REGISTRY:
            continue
        try:
            _REGISTRY[point.name] = point.load()
        except Exception:
            # A broken third-party plugin must not take down the harness;
            # the adapter simply does not appear in the listing.
            continue


def available_encoders() -> list:
    """Sorted names of all registered adapters, plugins included."""
    _load_entry_points()
    return sorted(_REGISTRY)


def create_encoder(name: str, **options) -> VideoEncoder:
    _load_entry_points()
    if name not in _REGISTRY:
        known = ", ".join(sorted(_REGISTRY)) or "(none)"
        raise ConfigError(f"unknown encoder {name!r}; registered: {known}")
    encoder = _REGISTRY[name](**options)
    if not isinstance(encoder, VideoEncoder):
        raise ConfigError(f"factory for {name!r} did not return a VideoEncoder")
    return encoder
