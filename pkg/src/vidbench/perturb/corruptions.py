"""Six pixel corruptions at severity levels 1..5.

Severity constants follow the published reference parameterisation of the
common-corruptions suite. Values are defined for the 224-pixel regime; the
elastic-transform constants scale proportionally with min(H, W) so behaviour
is size-consistent on smaller desk-scale clips. Stochastic corruptions draw
per-frame child generators (snow, impulse noise) while per-clip parameters
(motion-blur angle, elastic displacement fields) are drawn once per clip.
"""

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates
from scipy.ndimage import zoom as ndi_zoom

from ..errors import ConfigError
from ..validation import check_clip
from .spec import CORRUPTION_TYPES

_BRIGHTNESS_C = (0.1, 0.2, 0.3, 0.4, 0.5)
_IMPULSE_C = (0.03, 0.06, 0.09, 0.17, 0.27)
_PIXELATE_C = (0.6, 0.5, 0.4, 0.3, 0.25)
_MOTION_BLUR_C = ((10, 3), (15, 5), (15, 8), (15, 12), (20, 15))  # (radius, sigma)
# (mean, std, zoom, threshold, blur radius, blur sigma, blend)
_SNOW_C = (
    (0.1, 0.3, 3.0, 0.5, 10, 4, 0.8),
    (0.2, 0.3, 2.0, 0.5, 12, 4, 0.7),
    (0.55, 0.3, 4.0, 0.9, 12, 8, 0.7),
    (0.55, 0.3, 4.5, 0.85, 12, 8, 0.65),
    (0.55, 0.3, 4.5, 0.85, 12, 8, 0.55),
)


def _elastic_c(size: int) -> tuple:
    # (displacement alpha, smoothing sigma, affine jitter) per severity
    u = 244.0 * (size / 224.0)
    return (
        (u * 2.0, u * 0.7, u * 0.1),
        (u * 2.0, u * 0.08, u * 0.2),
        (u * 0.05, u * 0.01, u * 0.02),
        (u * 0.07, u * 0.01, u * 0.02),
        (u * 0.12, u * 0.01, u * 0.02),
    )


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    delta = maxc - minc
    safe_max = np.where(maxc == 0.0, 1.0, maxc)
    s = np.where(maxc == 0.0, 0.0, delta / safe_max)
    safe_delta = np.where(delta == 0.0, 1.0, delta)
    rc = (maxc - r) / safe_delta
    gc = (maxc - g) / safe_delta
    bc = (maxc - b) / safe_delta
    h = np.select([r == maxc, g == maxc], [bc - gc, 2.0 + rc - bc], default=4.0 + gc - rc)
    h = np.where(delta == 0.0, 0.0, (h / 6.0) % 1.0)
    return np.stack([h, s, maxc], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(np.int64) % 6
    sel = [i == k for k in range(6)]
    r = np.select(sel, [v, q, p, p, t, v])
    g = np.select(sel, [t, v, v, q, p, p])
    b = np.select(sel, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def _brightness(frame: np.ndarray, severity: int) -> np.ndarray:
    c = _BRIGHTNESS_C[severity - 1]
    hsv = rgb_to_hsv(frame)
    hsv[..., 2] = np.clip(hsv[..., 2] + c, 0.0, 1.0)
    return np.clip(hsv_to_rgb(hsv), 0.0, 1.0)


def _impulse_noise(frame: np.ndarray, severity: int, rng: np.random.Generator) -> np.ndarray:
    # salt-and-pepper on a fraction c of entries, half salt, half pepper
    c = _IMPULSE_C[severity - 1]
    out = frame.copy()
    flipped = rng.random(frame.shape) < c
    salted = rng.random(frame.shape) < 0.5
    out[flipped & salted] = 1.0
    out[flipped & ~salted] = 0.0
    return out


def _block_maps(h: int, w: int, dh: int, dw: int) -> tuple:
    return (np.arange(h) * dh) // h, (np.arange(w) * dw) // w


def _pixelate(frame: np.ndarray, severity: int) -> np.ndarray:
    c = _PIXELATE_C[severity - 1]
    h, w = frame.shape[:2]
    dh, dw = max(1, int(h * c)), max(1, int(w * c))
    row_map, col_map = _block_maps(h, w, dh, dw)
    flat = row_map[:, None] * dw + col_map[None, :]
    sums = np.zeros((dh * dw, frame.shape[2]), dtype=np.float64)
    np.add.at(sums, flat.ravel(), frame.reshape(-1, frame.shape[2]))
    counts = np.bincount(flat.ravel(), minlength=dh * dw).astype(np.float64)
    means = sums / counts[:, None]
    return means[flat.ravel()].reshape(frame.shape)


def _directional_blur(img: np.ndarray, radius: int, sigma: float, angle_deg: float) -> np.ndarray:
    """One-sided Gaussian-weighted line blur (motion streak)."""
    width = 2 * int(np.ceil(radius)) + 1
    taps = np.arange(width, dtype=np.float64)
    weights = np.exp(-(taps**2) / (2.0 * sigma**2))
    weights /= weights.sum()
    theta = np.deg2rad(angle_deg)
    dxs = np.rint(taps * np.cos(theta)).astype(np.int64)
    dys = np.rint(taps * np.sin(theta)).astype(np.int64)
    h, w = img.shape[:2]
    rows = np.arange(h)
    cols = np.arange(w)
    out = np.zeros_like(img, dtype=np.float64)
    for weight, dx, dy in zip(weights, dxs, dys):
        r = np.clip(rows + dy, 0, h - 1)
        c = np.clip(cols + dx, 0, w - 1)
        out += weight * img[r[:, None], c[None, :]]
    return out


def _clipped_zoom(img: np.ndarray, factor: float) -> np.ndarray:
    h, w = img.shape
    ch, cw = int(np.ceil(h / factor)), int(np.ceil(w / factor))
    top, left = (h - ch) // 2, (w - cw) // 2
    zoomed = ndi_zoom(img[top : top + ch, left : left + cw], factor, order=1)
    zh, zw = zoomed.shape
    if zh < h or zw < w:
        zoomed = np.pad(zoomed, ((0, max(0, h - zh)), (0, max(0, w - zw))), mode="edge")
        zh, zw = zoomed.shape
    top2, left2 = (zh - h) // 2, (zw - w) // 2
    return zoomed[top2 : top2 + h, left2 : left2 + w]


def _snow(frame: np.ndarray, severity: int, rng: np.random.Generator) -> np.ndarray:
    c = _SNOW_C[severity - 1]
    h, w = frame.shape[:2]
    layer = rng.normal(loc=c[0], scale=c[1], size=(h, w))
    layer = _clipped_zoom(layer, c[2])
    layer[layer < c[3]] = 0.0
    angle = rng.uniform(-135.0, -45.0)
    layer = np.clip(_directional_blur(layer, c[4], c[5], angle), 0.0, 1.0)
    gray = 0.299 * frame[..., 0] + 0.587 * frame[..., 1] + 0.114 * frame[..., 2]
    darkened = c[6] * frame + (1.0 - c[6]) * np.maximum(frame, gray[..., None] * 1.5 + 0.5)
    return np.clip(darkened + layer[..., None] + layer[::-1, ::-1][..., None], 0.0, 1.0)


def _elastic_params(h: int, w: int, severity: int, rng: np.random.Generator) -> dict:
    alpha, sigma, affine_d = _elastic_c(min(h, w))[severity - 1]
    cx, cy = w // 2, h // 2
    side = min(h, w) // 3
    pts1 = np.array(
        [[cx + side, cy + side], [cx + side, cy - side], [cx - side, cy - side]], dtype=np.float64
    )
    pts2 = pts1 + rng.uniform(-affine_d, affine_d, size=(3, 2))
    design = np.hstack([pts1, np.ones((3, 1))])
    affine = np.linalg.solve(design, pts2).T  # 2x3 forward map, (x, y) convention
    inv = np.linalg.inv(affine[:, :2])
    dx = gaussian_filter(rng.uniform(-1.0, 1.0, (h, w)), sigma, mode="reflect", truncate=3) * alpha
    dy = gaussian_filter(rng.uniform(-1.0, 1.0, (h, w)), sigma, mode="reflect", truncate=3) * alpha
    return {"inv": inv, "offset": affine[:, 2], "dx": dx, "dy": dy}


def _apply_elastic(frame: np.ndarray, params: dict) -> np.ndarray:
    h, w = frame.shape[:2]
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    inv, offset = params["inv"], params["offset"]
    sx = inv[0, 0] * (xs - offset[0]) + inv[0, 1] * (ys - offset[1])
    sy = inv[1, 0] * (xs - offset[0]) + inv[1, 1] * (ys - offset[1])
    out = np.empty_like(frame)
    for ch in range(frame.shape[2]):
        warped = map_coordinates(frame[..., ch], [sy, sx], order=1, mode="mirror")
        out[..., ch] = map_coordinates(
            warped, [ys + params["dy"], xs + params["dx"]], order=1, mode="reflect"
        )
    return np.clip(out, 0.0, 1.0)


def corrupt_clip(clip: np.ndarray, corruption: str, severity: int, seed: int) -> np.ndarray:
    """Apply one corruption to every frame; deterministic for a fixed seed."""
    clip = check_clip(clip)
    if corruption not in CORRUPTION_TYPES:
        raise ConfigError(f"unknown corruption {corruption!r}, expected one of {CORRUPTION_TYPES}")
    if severity not in (1, 2, 3, 4, 5):
        raise ConfigError(f"corruption severity must be in 1..5, got {severity!r}")
    x = clip.astype(np.float64) / 255.0
    t, h, w, _ = x.shape
    base = int(seed) & ((1 << 63) - 1)
    master = np.random.default_rng([base, 0])
    out = np.empty_like(x)

    if corruption == "brightness":
        for i in range(t):
            out[i] = _brightness(x[i], severity)
    elif corruption == "pixelate":
        for i in range(t):
            out[i] = _pixelate(x[i], severity)
    elif corruption == "impulse_noise":
        for i in range(t):
            out[i] = _impulse_noise(x[i], severity, np.random.default_rng([base, 1, i]))
    elif corruption == "snow":
        for i in range(t):
            out[i] = _snow(x[i], severity, np.random.default_rng([base, 2, i]))
    elif corruption == "motion_blur":
        radius, sigma = _MOTION_BLUR_C[severity - 1]
        angle = master.uniform(-45.0, 45.0)
        for i in range(t):
            out[i] = np.clip(_directional_blur(x[i], radius, sigma, angle), 0.0, 1.0)
    else:  # elastic_transform
        params = _elastic_params(h, w, severity, master)
        for i in range(t):
            out[i] = _apply_elastic(x[i], params)

    return np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8)
