"""Rotation, padding, trimming, resizing and angle arithmetic for RGB rasters.

Images are numpy arrays of shape (H, W, 3), dtype uint8, RGB channel order.
Angles are integer degrees, counter-clockwise positive, normalized modulo 360.
All functions are pure: they never mutate their inputs.
"""

from __future__ import annotations

import io
import math
from pathlib import Path

import cv2
import numpy as np
from PIL import Image as PILImage

from .errors import AllBlackError, InvalidImageError

# Bilinear interpolation bleeds near-black values along the content boundary,
# so trimming at exactly 0 over-retains padding.
DEFAULT_TRIM_THRESHOLD = 2


def ensure_image(img: np.ndarray) -> np.ndarray:
    """Validate that ``img`` is a (H, W, 3) uint8 array and return it."""
    if not isinstance(img, np.ndarray):
        raise InvalidImageError(f"expected numpy array, got {type(img).__name__}")
    if img.dtype != np.uint8:
        raise InvalidImageError(f"expected uint8 pixels, got dtype {img.dtype}")
    if img.ndim != 3 or img.shape[2] != 3:
        raise InvalidImageError(f"expected shape (H, W, 3), got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise InvalidImageError(f"image dimensions must be >= 1, got {img.shape}")
    return img


def normalize_angle(angle: int) -> int:
    """Reduce an integer degree value to [0, 360)."""
    return int(angle) % 360


def _cos_sin(angle: int) -> tuple[float, float]:
    # Exact values at right angles so the bounding box never picks up a
    # spurious +1 from floating-point residue like cos(90 deg) ~ 6e-17.
    a = normalize_angle(angle)
    exact = {0: (1.0, 0.0), 90: (0.0, 1.0), 180: (-1.0, 0.0), 270: (0.0, -1.0)}
    if a in exact:
        return exact[a]
    r = math.radians(a)
    return math.cos(r), math.sin(r)


def rotated_bounds(width: int, height: int, angle: int) -> tuple[int, int]:
    """Canvas size (W', H') that exactly contains ``width`` x ``height`` rotated by ``angle``."""
    c, s = _cos_sin(angle)
    new_w = math.ceil(abs(c) * width + abs(s) * height)
    new_h = math.ceil(abs(s) * width + abs(c) * height)
    return new_w, new_h


def rotate_with_pad(img: np.ndarray, angle: int) -> np.ndarray:
    """Rotate ``img`` counter-clockwise about its center onto an enlarged black canvas.

    The canvas is the exact ceil bounding box of the rotated content, so
    nothing is cropped and the content keeps its original pixel scale.
    Multiples of 90 degrees are exact index permutations (no interpolation);
    other angles use bilinear interpolation with black fill.
    """
    img = ensure_image(img)
    a = normalize_angle(angle)
    if a % 90 == 0:
        return np.ascontiguousarray(np.rot90(img, k=a // 90))
    h, w = img.shape[:2]
    new_w, new_h = rotated_bounds(w, h, a)
    m = cv2.getRotationMatrix2D((w / 2.0, h / 2.0), a, 1.0)
    m[0, 2] += new_w / 2.0 - w / 2.0
    m[1, 2] += new_h / 2.0 - h / 2.0
    return cv2.warpAffine(
        img,
        m,
        (new_w, new_h),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=(0, 0, 0),
    )


def trim_black_padding(
    img: np.ndarray,
    black_threshold: int = DEFAULT_TRIM_THRESHOLD,
    *,
    on_all_black: str = "raise",
) -> np.ndarray:
    """Strip every outermost row/column whose pixels are all <= ``black_threshold``.

    Edge rows/columns are removed from all four sides until none qualifies,
    which is equivalent to cropping to the bounding box of the non-black
    pixels. A fully black image raises AllBlackError unless
    ``on_all_black="shrink"``, which returns a 1x1 black image instead.
    """
    img = ensure_image(img)
    if not 0 <= black_threshold <= 255:
        raise ValueError(f"black_threshold must be in [0, 255], got {black_threshold}")
    content = (img > black_threshold).any(axis=2)
    rows = np.flatnonzero(content.any(axis=1))
    if rows.size == 0:
        if on_all_black == "shrink":
            return np.zeros((1, 1, 3), dtype=np.uint8)
        raise AllBlackError(
            f"every pixel is at or below threshold {black_threshold}; nothing would remain"
        )
    cols = np.flatnonzero(content.any(axis=0))
    return np.ascontiguousarray(img[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1])


def resize(img: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Bilinear-resample ``img`` to exactly ``target_w`` x ``target_h``."""
    img = ensure_image(img)
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {target_w}x{target_h}")
    h, w = img.shape[:2]
    if (w, h) == (target_w, target_h):
        return img.copy()
    return cv2.resize(img, (target_w, target_h), interpolation=cv2.INTER_LINEAR)


def circular_diff(a: int, b: int) -> int:
    """Shortest angular distance between two degree values, in [0, 180]."""
    d = abs(normalize_angle(a) - normalize_angle(b))
    return min(d, 360 - d)


def _flatten_to_rgb(im: PILImage.Image) -> np.ndarray:
    if im.mode == "P" and "transparency" in im.info:
        im = im.convert("RGBA")
    if im.mode in ("RGBA", "LA"):
        rgba = np.asarray(im.convert("RGBA"), dtype=np.float64)
        rgb = rgba[..., :3] * (rgba[..., 3:4] / 255.0)
        return np.ascontiguousarray(np.rint(rgb).astype(np.uint8))
    return np.ascontiguousarray(np.asarray(im.convert("RGB"), dtype=np.uint8))


def load_image(path: str | Path) -> np.ndarray:
    """Read a PNG/JPEG file into an RGB raster, flattening alpha against black."""
    with PILImage.open(path) as im:
        return ensure_image(_flatten_to_rgb(im))


def decode_image(data: bytes) -> np.ndarray:
    """Decode encoded PNG/JPEG bytes into an RGB raster."""
    with PILImage.open(io.BytesIO(data)) as im:
        return ensure_image(_flatten_to_rgb(im))


def save_image(path: str | Path, img: np.ndarray) -> None:
    """Write an RGB raster to ``path``; format follows the file extension."""
    PILImage.fromarray(ensure_image(img), mode="RGB").save(path)


def encode_png(img: np.ndarray) -> bytes:
    """Encode an RGB raster as PNG bytes (the canonical wire encoding)."""
    buf = io.BytesIO()
    PILImage.fromarray(ensure_image(img), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
