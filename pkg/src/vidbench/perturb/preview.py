"""Frame-grid preview images for visual audit of perturbation conditions."""

from pathlib import Path

import numpy as np

from .spec import PerturbationSpec

_SEPARATOR = 2
_GUTTER = 168


def _tile_rows(rows: list, max_frames: int) -> np.ndarray:
    tiles = []
    for _, clip in rows:
        t = clip.shape[0]
        idx = np.unique(((np.arange(min(t, max_frames)) * t) // min(t, max_frames)))
        frames = [clip[i] for i in idx]
        sep = np.full((clip.shape[1], _SEPARATOR, 3), 255, dtype=np.uint8)
        cells = []
        for f in frames:
            cells.extend([f, sep])
        tiles.append(np.hstack(cells[:-1]))
    width = max(tile.shape[1] for tile in tiles)
    rows_out = []
    hsep = np.full((_SEPARATOR, width + _GUTTER, 3), 255, dtype=np.uint8)
    for tile in tiles:
        if tile.shape[1] < width:
            tile = np.pad(tile, ((0, 0), (0, width - tile.shape[1]), (0, 0)), constant_values=32)
        gutter = np.full((tile.shape[0], _GUTTER, 3), 16, dtype=np.uint8)
        rows_out.extend([np.hstack([gutter, tile]), hsep])
    return np.vstack(rows_out[:-1])


def render_preview(clip: np.ndarray, specs: list, clip_id: str, path, max_frames: int = 8) -> Path:
    """Write one PNG: a clean row plus one row per perturbation spec."""
    from PIL import Image, ImageDraw

    from . import apply

    rows = [("clean", clip)]
    for spec in specs:
        if isinstance(spec, str):
            raise TypeError("specs must be PerturbationSpec instances")
        rows.append((_label(spec), apply(spec, clip, clip_id)))

    grid = _tile_rows(rows, max_frames)
    image = Image.fromarray(grid)
    draw = ImageDraw.Draw(image)
    y = 0
    for label, clip_row in rows:
        draw.text((4, y + 4), label, fill=(235, 235, 235))
        y += clip_row.shape[1] + _SEPARATOR
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image.save(path)
    return path


def _label(spec: PerturbationSpec) -> str:
    if spec.family == "temporal":
        return spec.condition
    return f"{spec.condition} @{spec.severity}"
