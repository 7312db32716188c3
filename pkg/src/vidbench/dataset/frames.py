"""Clip decoding and uniform frame sampling."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError
from ..validation import check_clip


@dataclass(frozen=True)
class VideoClip:
    clip_id: str
    frames: np.ndarray  # T x H x W x 3, uint8
    label: int

    @property
    def frame_count(self) -> int:
        return int(self.frames.shape[0])


def _as_frames(arr, source) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[-1] != 3:
        raise DataError(f"{source}: expected frames of shape (L,H,W,3), got {arr.shape}")
    if arr.dtype != np.uint8:
        if np.issubdtype(arr.dtype, np.floating) and arr.size and arr.max() <= 1.0 and arr.min() >= 0.0:
            arr = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
        else:
            arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    return np.ascontiguousarray(arr)


def decode_npz(path: Path) -> np.ndarray:
    with np.load(path) as archive:
        if "frames" in archive:
            return _as_frames(archive["frames"], path)
        names = list(archive.files)
        if not names:
            raise DataError(f"{path}: empty archive")
        return _as_frames(archive[names[0]], path)


def decode_npy(path: Path) -> np.ndarray:
    return _as_frames(np.load(path), path)


def decode_image_dir(path: Path) -> np.ndarray:
    from PIL import Image

    files = sorted(p for p in Path(path).iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp"))
    if not files:
        raise DataError(f"{path}: no image frames found")
    frames = [np.asarray(Image.open(f).convert("RGB")) for f in files]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise DataError(f"{path}: frames disagree on shape: {sorted(shapes)}")
    return _as_frames(np.stack(frames), path)


def decode_video(path: Path) -> np.ndarray:
    try:
        import cv2
    except ImportError:
        raise DataError(
            f"{path}: decoding container files requires opencv-python; "
            "install it or re-encode clips as frame archives (.npz)"
        ) from None
    capture = cv2.VideoCapture(str(path))
    frames = []
    while True:
        ok, frame = capture.read()
        if not ok:
            break
        frames.append(frame[:, :, ::-1])  # BGR -> RGB
    capture.release()
    if not frames:
        raise DataError(f"{path}: no decodable frames")
    return _as_frames(np.stack(frames), path)


DECODERS = {
    "npz": decode_npz,
    "npy": decode_npy,
    "image_dir": decode_image_dir,
    "video": decode_video,
}


def sample_frame_indices(length: int, count: int) -> np.ndarray:
    """Uniformly spaced indices: index_i = floor(i * length / count).

    Clips shorter than ``count`` repeat frames through the same rule; no
    pixel data is ever fabricated.
    """
    if length < 1:
        raise DataError("cannot sample frames from an empty video")
    if count < 1:
        raise DataError("frame count must be >= 1")
    return (np.arange(count, dtype=np.int64) * length) // count


def sample_frames(frames: np.ndarray, count: int) -> np.ndarray:
    indices = sample_frame_indices(frames.shape[0], count)
    return np.ascontiguousarray(frames[indices])


def load_clip(video_root, entry, decoder: str = "npz", frame_count: int = 16) -> VideoClip:
    """Decode one manifest entry and sample it to the configured frame budget."""
    if decoder not in DECODERS:
        raise ConfigError(f"unknown decoder {decoder!r}, expected one of {sorted(DECODERS)}")
    path = Path(video_root) / entry.path
    if not path.exists():
        raise DataError(f"clip payload not found: {path} (clip {entry.clip_id})")
    raw = DECODERS[decoder](path)
    frames = check_clip(sample_frames(raw, frame_count))
    return VideoClip(clip_id=entry.clip_id, frames=frames, label=entry.class_id)
