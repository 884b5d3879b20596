"""Shared builders and fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from rotguard.similarity import LabelSet, normalize_labels

# Fig-4-style worked example: baseline labels and the rotated image's
# overlapping labels, on the 0-100 confidence scale.
BASELINE_LABEL_SCORES = [
    ("Font", 78),
    ("Line", 70),
    ("Symbol", 68),
    ("Number", 63),
    ("Angle", 61),
    ("Brand", 53),
    ("Logo", 53),
    ("Black and White", 51),
]
ROTATED_LABEL_SCORES = [
    ("Font", 71),
    ("Line", 69),
    ("Symbol", 68),
    ("Logo", 53),
    ("Angle", 56),
]


def structured_image(width: int, height: int, seed: int = 0) -> np.ndarray:
    """Smooth, asymmetric RGB test image with no black borders.

    Border rows/columns are reinforced to stay bright so trim operations
    never eat real content, and the content is asymmetric enough that any
    two distinct rotations differ visibly.
    """
    import cv2

    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    radius = np.hypot(xx - width * 0.3, yy - height * 0.4)
    img = np.stack(
        [
            60 + 140 * xx / max(width - 1, 1),
            60 + 140 * yy / max(height - 1, 1),
            60 + 140 * (0.5 + 0.5 * np.cos(radius / 9.0)),
        ],
        axis=-1,
    )
    img += rng.normal(0, 4, img.shape)
    img = cv2.GaussianBlur(img.astype(np.float32), (5, 5), 1.2)
    img = np.clip(img, 45, 230).astype(np.uint8)
    for edge in (img[0, :], img[-1, :], img[:, 0], img[:, -1]):
        np.maximum(edge, 160, out=edge)
    return img


@pytest.fixture
def baseline_labels() -> LabelSet:
    return normalize_labels(BASELINE_LABEL_SCORES)


@pytest.fixture
def rotated_labels() -> LabelSet:
    return normalize_labels(ROTATED_LABEL_SCORES)


class CountingProvider:
    """Wraps a provider and counts how many times it is actually called.

    Everything except label() is delegated, so angle registration and other
    provider-specific hooks pass straight through.
    """

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    @property
    def provider_id(self) -> str:
        return self.inner.provider_id

    def label(self, request):
        self.calls += 1
        return self.inner.label(request)

    def __getattr__(self, name):
        return getattr(self.inner, name)
