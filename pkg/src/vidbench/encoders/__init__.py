"""Frozen encoder adapters and the adapter registry."""

from .base import (
    ENTRY_POINT_GROUP,
    GAP_TOLERANCE,
    EmbeddingRecord,
    EncoderSpec,
    VideoEncoder,
    available_encoders,
    create_encoder,
    enforce_input_contract,
    register_encoder,
)
from .toy import ToyEncoder, toy_encode

register_encoder("toy", ToyEncoder)

__all__ = [
    "ENTRY_POINT_GROUP",
    "GAP_TOLERANCE",
    "EmbeddingRecord",
    "EncoderSpec",
    "ToyEncoder",
    "VideoEncoder",
    "available_encoders",
    "create_encoder",
    "enforce_input_contract",
    "register_encoder",
    "toy_encode",
]
