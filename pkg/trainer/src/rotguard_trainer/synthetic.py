"""Synthetic street-scene generator for desk-scale training runs.

Every scene has an unambiguous vertical orientation cue (bright sky over
dark ground with a hard horizon) plus per-seed variation (sun position,
building skyline, palette jitter), so a small model can learn rotation
prediction from a handful of images. Pixel values stay well above black
so downstream padding trims never eat scene content.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage


def synthetic_scene(width: int = 96, height: int = 96, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    yy = np.linspace(0.0, 1.0, height)[:, None]
    horizon = float(rng.uniform(0.52, 0.68))

    img = np.empty((height, width, 3), dtype=np.float64)
    # sky: bright, bluish, fading toward the horizon
    sky_top = np.array([150, 190, 240]) + rng.uniform(-15, 15, 3)
    sky_bottom = np.array([210, 220, 235]) + rng.uniform(-15, 15, 3)
    t = np.clip(yy / horizon, 0.0, 1.0)
    img[:] = (sky_top * (1 - t) + sky_bottom * t)[:, None, :]

    # ground: dark, brownish, darkening toward the bottom edge
    ground_top = np.array([110, 95, 75]) + rng.uniform(-10, 10, 3)
    ground_bottom = np.array([55, 50, 45]) + rng.uniform(-10, 10, 3)
    g = np.clip((yy - horizon) / (1 - horizon), 0.0, 1.0)
    ground = ground_top * (1 - g) + ground_bottom * g  # (H, 3) per-row color
    below = (yy >= horizon)[:, 0]
    img[below] = ground[below][:, None, :]

    # sun disk in the sky
    sun_x = rng.uniform(0.15, 0.85) * width
    sun_y = rng.uniform(0.08, 0.30) * height
    sun_r = rng.uniform(0.06, 0.12) * min(width, height)
    ygrid, xgrid = np.mgrid[0:height, 0:width]
    sun = (xgrid - sun_x) ** 2 + (ygrid - sun_y) ** 2 <= sun_r**2
    img[sun] = np.array([250, 240, 180]) + rng.uniform(-5, 5, 3)

    # building skyline rising from the horizon
    for _ in range(int(rng.integers(2, 5))):
        bw = int(rng.uniform(0.08, 0.2) * width)
        bx = int(rng.uniform(0, max(width - bw, 1)))
        btop = int((horizon - rng.uniform(0.12, 0.3)) * height)
        bbot = int(horizon * height)
        color = np.array([90, 90, 100]) + rng.uniform(-25, 25, 3)
        img[max(btop, 0) : bbot, bx : bx + bw] = color

    img += rng.normal(0, 3, img.shape)
    return np.clip(img, 25, 255).astype(np.uint8)


def make_dataset(
    out_dir: str | Path, count: int, seed: int = 0, width: int = 96, height: int = 96
) -> list[Path]:
    """Write ``count`` synthetic scenes as PNGs and return their paths."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        scene = synthetic_scene(width, height, seed=seed * 100003 + i)
        path = root / f"scene-{i:04d}.png"
        PILImage.fromarray(scene, mode="RGB").save(path)
        paths.append(path)
    return paths
