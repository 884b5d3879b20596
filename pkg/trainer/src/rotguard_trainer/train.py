"""Training loop and TorchScript export for the orientation classifier."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .data import ANGLE_CLASSES, generate_batch, list_images, load_rgb
from .model import build_model


@dataclass(frozen=True)
class TrainConfig:
    dataset_dir: str | Path
    export_path: str | Path
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    arch: str = "resnet50"
    pretrained: bool = True
    input_size: int = 224
    mean: tuple[float, float, float] = (0.0, 0.0, 0.0)
    scale: tuple[float, float, float] = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class TrainResult:
    model_path: Path
    sidecar_path: Path
    log_path: Path
    batch_losses: list[float] = field(default_factory=list)
    epoch_losses: list[float] = field(default_factory=list)


def train(config: TrainConfig, model: nn.Module | None = None) -> TrainResult:
    """Fine-tune the classifier on randomly rotated copies of the dataset.

    Every epoch reshuffles the corpus and draws fresh rotation angles, so
    augmentation happens on the fly without materializing rotated copies.
    Exports the TorchScript artifact, the preprocessing sidecar, and a
    JSON loss log next to it.
    """
    paths = list_images(config.dataset_dir)
    if not paths:
        raise ValueError(f"dataset directory {config.dataset_dir} has no images")
    images = [load_rgb(p) for p in paths]

    torch.manual_seed(config.seed)
    if model is None:
        model = build_model(config.arch, pretrained=config.pretrained)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    rng = np.random.default_rng(config.seed)

    batch_losses: list[float] = []
    epoch_losses: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(len(images))
        epoch: list[float] = []
        for start in range(0, len(images), config.batch_size):
            chunk = [images[i] for i in order[start : start + config.batch_size]]
            batch = generate_batch(
                chunk,
                seed=int(rng.integers(2**63)),
                input_size=config.input_size,
                mean=config.mean,
                scale=config.scale,
            )
            inputs = torch.from_numpy(batch.inputs)
            labels = torch.from_numpy(batch.labels)
            optimizer.zero_grad()
            loss = loss_fn(model(inputs), labels)
            loss.backward()
            optimizer.step()
            epoch.append(float(loss.detach()))
        batch_losses.extend(epoch)
        epoch_losses.append(sum(epoch) / len(epoch))

    return export(model, config, batch_losses, epoch_losses)


def export(
    model: nn.Module,
    config: TrainConfig,
    batch_losses: list[float] | None = None,
    epoch_losses: list[float] | None = None,
) -> TrainResult:
    """Serialize the model as TorchScript with its sidecar and loss log."""
    model_path = Path(config.export_path)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    model.eval()
    example = torch.zeros(1, 3, config.input_size, config.input_size)
    with torch.inference_mode():
        traced = torch.jit.trace(model, example)
    traced.save(str(model_path))

    sidecar_path = model_path.with_suffix(model_path.suffix + ".json")
    sidecar_path.write_text(
        json.dumps(
            {
                "layout": "nchw",
                "mean": list(config.mean),
                "scale": list(config.scale),
                "invert_prediction": False,
                "input_width": config.input_size,
                "input_height": config.input_size,
            },
            indent=1,
        ),
        encoding="utf-8",
    )

    log_path = model_path.with_suffix(model_path.suffix + ".losses.json")
    log_path.write_text(
        json.dumps(
            {
                "batch_losses": batch_losses or [],
                "epoch_losses": epoch_losses or [],
                "classes": ANGLE_CLASSES,
                "arch": config.arch,
                "epochs": config.epochs,
                "batch_size": config.batch_size,
                "learning_rate": config.learning_rate,
                "seed": config.seed,
            },
            indent=1,
        ),
        encoding="utf-8",
    )
    return TrainResult(
        model_path, sidecar_path, log_path, batch_losses or [], epoch_losses or []
    )
