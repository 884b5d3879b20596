"""On-the-fly rotated-batch generation from a directory of upright images.

The label convention is shared with the inference pipeline: a sample's
label is the counter-clockwise rotation (integer degrees, 0..359) that was
applied to its upright source image. Rotation expands the canvas to the
rotated bounding box with black fill, matching what a corrected-image
pipeline feeds the model at inference time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import cv2
import numpy as np
from PIL import Image as PILImage

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")
ANGLE_CLASSES = 360


def list_images(dataset_dir: str | Path) -> list[Path]:
    root = Path(dataset_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory {root} does not exist")
    return sorted(
        p for p in root.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS and p.is_file()
    )


def load_rgb(path: str | Path) -> np.ndarray:
    with PILImage.open(path) as im:
        return np.ascontiguousarray(np.asarray(im.convert("RGB"), dtype=np.uint8))


def rotate_expand(img: np.ndarray, angle: int) -> np.ndarray:
    """Rotate CCW about the center onto the enlarged black bounding-box canvas."""
    a = int(angle) % 360
    if a % 90 == 0:
        return np.ascontiguousarray(np.rot90(img, k=a // 90))
    h, w = img.shape[:2]
    rad = math.radians(a)
    cos, sin = abs(math.cos(rad)), abs(math.sin(rad))
    new_w = math.ceil(cos * w + sin * h)
    new_h = math.ceil(sin * w + cos * h)
    m = cv2.getRotationMatrix2D((w / 2.0, h / 2.0), a, 1.0)
    m[0, 2] += new_w / 2.0 - w / 2.0
    m[1, 2] += new_h / 2.0 - h / 2.0
    return cv2.warpAffine(
        img, m, (new_w, new_h), flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT, borderValue=(0, 0, 0),
    )


@dataclass(frozen=True)
class RotatedBatch:
    """Model-input tensors (N, 3, S, S) float32 with their angle labels."""

    inputs: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


def generate_batch(
    images: Sequence[np.ndarray],
    seed: int,
    input_size: int = 224,
    mean: Sequence[float] = (0.0, 0.0, 0.0),
    scale: Sequence[float] = (1.0, 1.0, 1.0),
) -> RotatedBatch:
    """Rotate every image by an independent uniform angle and preprocess it.

    Deterministic for a fixed seed: the angle for sample i depends only on
    (seed, i).
    """
    if not images:
        raise ValueError("cannot generate a batch from an empty image list")
    rng = np.random.default_rng(seed)
    angles = rng.integers(0, ANGLE_CLASSES, size=len(images))
    mean_arr = np.asarray(mean, dtype=np.float32)
    scale_arr = np.asarray(scale, dtype=np.float32)
    inputs = np.empty((len(images), 3, input_size, input_size), dtype=np.float32)
    for i, (img, angle) in enumerate(zip(images, angles)):
        rotated = rotate_expand(img, int(angle))
        resized = cv2.resize(
            rotated, (input_size, input_size), interpolation=cv2.INTER_LINEAR
        )
        x = resized.astype(np.float32) / 255.0
        x = (x - mean_arr) / scale_arr
        inputs[i] = np.transpose(x, (2, 0, 1))
    return RotatedBatch(inputs, angles.astype(np.int64))
