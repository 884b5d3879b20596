"""Training side of the orientation-correction pipeline.

Rotates upright images on the fly into labeled batches, fine-tunes a
360-class classifier, and exports a TorchScript artifact plus the
preprocessing sidecar consumed by the inference package.
"""

__version__ = "0.1.0"

from .data import RotatedBatch, generate_batch, list_images, load_rgb, rotate_expand
from .model import TinyOrientationNet, build_model
from .synthetic import make_dataset, synthetic_scene
from .train import TrainConfig, TrainResult, train

__all__ = [
    "__version__",
    "RotatedBatch",
    "generate_batch",
    "list_images",
    "load_rgb",
    "rotate_expand",
    "TinyOrientationNet",
    "build_model",
    "make_dataset",
    "synthetic_scene",
    "TrainConfig",
    "TrainResult",
    "train",
]
