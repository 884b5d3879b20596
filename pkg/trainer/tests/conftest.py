"""Fixtures for the trainer suite."""

from __future__ import annotations

import pytest

from rotguard_trainer.data import load_rgb
from rotguard_trainer.synthetic import make_dataset


@pytest.fixture(scope="session")
def scene_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("scenes")
    make_dataset(root, 24, seed=0, width=96, height=96)
    return root


@pytest.fixture(scope="session")
def scenes(scene_dir):
    from rotguard_trainer.data import list_images

    return [load_rgb(p) for p in list_images(scene_dir)]
