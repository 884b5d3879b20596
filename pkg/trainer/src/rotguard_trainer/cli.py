"""Command-line entry points for training and dataset generation."""

from __future__ import annotations

import sys

import click

from . import __version__
from .synthetic import make_dataset
from .train import TrainConfig, train


def _triple(value: str) -> tuple[float, float, float]:
    parts = [float(p) for p in value.split(",")]
    if len(parts) != 3:
        raise click.BadParameter(f"expected three comma-separated values, got {value!r}")
    return tuple(parts)


@click.group()
@click.version_option(version=__version__, prog_name="rotguard-train")
def cli():
    """Train and export 360-class orientation classifiers."""


@cli.command("train")
@click.option("--dataset", type=click.Path(), required=True,
              help="Directory of upright JPEG/PNG images.")
@click.option("--export", "export_path", type=click.Path(), required=True,
              help="Output TorchScript path; sidecar and loss log go next to it.")
@click.option("--arch", type=click.Choice(["resnet50", "tiny"]), default="resnet50",
              show_default=True)
@click.option("--epochs", type=int, default=50, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--learning-rate", type=float, default=1e-3, show_default=True)
@click.option("--input-size", type=int, default=224, show_default=True)
@click.option("--mean", default="0,0,0", show_default=True,
              help="Per-channel mean applied to [0,1] pixels.")
@click.option("--scale", default="1,1,1", show_default=True,
              help="Per-channel scale applied to [0,1] pixels.")
@click.option("--no-pretrained", is_flag=True,
              help="Skip the ImageNet weight fetch and start from random init.")
@click.option("--seed", type=int, default=0, show_default=True)
def train_command(dataset, export_path, arch, epochs, batch_size, learning_rate,
                  input_size, mean, scale, no_pretrained, seed):
    """Fine-tune the classifier on rotated batches generated on the fly."""
    config = TrainConfig(
        dataset_dir=dataset,
        export_path=export_path,
        epochs=epochs,
        batch_size=batch_size,
        learning_rate=learning_rate,
        seed=seed,
        arch=arch,
        pretrained=not no_pretrained,
        input_size=input_size,
        mean=_triple(mean),
        scale=_triple(scale),
    )
    result = train(config)
    click.echo(
        f"epoch losses: first {result.epoch_losses[0]:.4f} "
        f"last {result.epoch_losses[-1]:.4f}",
        err=True,
    )
    click.echo(f"wrote {result.model_path}, {result.sidecar_path}, {result.log_path}",
               err=True)


@cli.command("make-dataset")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--count", type=int, default=64, show_default=True)
@click.option("--width", type=int, default=96, show_default=True)
@click.option("--height", type=int, default=96, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def make_dataset_command(out_dir, count, width, height, seed):
    """Generate a synthetic oriented-scene dataset for desk-scale runs."""
    paths = make_dataset(out_dir, count, seed=seed, width=width, height=height)
    click.echo(f"wrote {len(paths)} scenes to {out_dir}", err=True)


def entrypoint() -> None:
    sys.exit(cli.main(standalone_mode=True))


if __name__ == "__main__":
    entrypoint()
