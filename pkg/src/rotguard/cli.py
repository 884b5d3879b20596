"""Command-line interface: every library operation as a subcommand.

All subcommands are thin wrappers over the library modules; no scoring or
geometry logic lives here. Machine-readable results (JSON, CSV) go to
stdout or files, human-facing progress goes to stderr.

Exit codes: 0 success; 1 computation error; 2 usage or I/O error
(including transport and model-load failures); 3 auth/quota.

Configuration precedence, highest first: command-line flags, environment
(ROTGUARD_CACHE_DIR, GOOGLE_API_KEY), the --config INI file's [rotguard]
section, built-in defaults. Every command accepts --print-config to dump
the effective merged settings and exit.
"""

from __future__ import annotations

import configparser
import json
import os
import sys
from pathlib import Path

import click

from . import __version__
from .errors import (
    AuthError,
    ModelLoadError,
    QuotaError,
    RotguardError,
    TransportError,
)
from .geometry import (
    DEFAULT_TRIM_THRESHOLD,
    load_image,
    rotate_with_pad,
    save_image,
    trim_black_padding,
)
from .pipeline import Flip180, ModelPredictor, OraclePredictor, correct_double_pass
from .providers import (
    DEFAULT_MAX_RESULTS,
    DegradationProfile,
    FixtureProvider,
    GoogleVisionProvider,
    LabelCache,
    LabelRequest,
    SyntheticProvider,
    cached_label,
    default_degradation_profile,
)
from .similarity import LabelSet, similarity_index
from .sweep import (
    SweepConfig,
    aggregate,
    read_records_csv,
    run_sweep,
    write_aggregates_csv,
    write_records_csv,
    write_records_jsonl,
)

DEFAULTS = {
    "provider": "synthetic",
    "predictor": "oracle",
    "cache_dir": ".rotguard-cache",
    "fixture_dir": None,
    "fixture_provider_id": "google-vision",
    "model": None,
    "sidecar": None,
    "api_key": None,
    "max_results": DEFAULT_MAX_RESULTS,
    "seed": 0,
    "workers": 1,
    "synthetic_labels": None,
    "synthetic_floor": 0.35,
    "synthetic_jitter": 0.15,
    "synthetic_drop": 0.3,
    "angle_start": 0,
    "angle_stop": 357,
    "angle_step": 3,
    "conditions": "rotated,corrected",
    "trim_threshold": DEFAULT_TRIM_THRESHOLD,
}

_INT_KEYS = {
    "max_results",
    "seed",
    "workers",
    "angle_start",
    "angle_stop",
    "angle_step",
    "trim_threshold",
}
_FLOAT_KEYS = {"synthetic_floor", "synthetic_jitter", "synthetic_drop"}

_ENV_KEYS = {"cache_dir": "ROTGUARD_CACHE_DIR", "api_key": "GOOGLE_API_KEY"}


def _read_config_file(path: str | None) -> dict:
    if not path:
        return {}
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise click.UsageError(f"config file {path} not found or unreadable")
    if not parser.has_section("rotguard"):
        return {}
    return dict(parser.items("rotguard"))


def _coerce(key: str, value):
    if value is None or not isinstance(value, str):
        return value
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    return value


def effective_config(config_path: str | None, flags: dict) -> dict:
    """Merge defaults < config file < environment < explicit flags."""
    merged = dict(DEFAULTS)
    for key, value in _read_config_file(config_path).items():
        if key in merged:
            merged[key] = _coerce(key, value)
    for key, env_name in _ENV_KEYS.items():
        if os.environ.get(env_name):
            merged[key] = os.environ[env_name]
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    return merged


def _maybe_print_config(cfg: dict, print_config: bool) -> bool:
    if print_config:
        printable = {k: (str(v) if isinstance(v, Path) else v) for k, v in cfg.items()}
        click.echo(json.dumps(printable, indent=1, sort_keys=True))
    return print_config


class _CountingProvider:
    """Transparent proxy that tallies actual backend calls for the run log."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    @property
    def provider_id(self):
        return self.inner.provider_id

    def label(self, request):
        self.calls += 1
        return self.inner.label(request)

    def __getattr__(self, name):
        return getattr(self.inner, name)


def _load_label_file(path: str) -> LabelSet:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return LabelSet.from_json(doc)
    except (json.JSONDecodeError, ValueError) as exc:
        raise click.UsageError(f"{path}: {exc}") from exc


def _build_profile(cfg: dict) -> DegradationProfile:
    if cfg["synthetic_labels"]:
        base = _load_label_file(cfg["synthetic_labels"])
        return DegradationProfile.linear(
            base,
            floor=cfg["synthetic_floor"],
            jitter=cfg["synthetic_jitter"],
            drop_threshold=cfg["synthetic_drop"],
            seed=cfg["seed"],
        )
    return default_degradation_profile(
        floor=cfg["synthetic_floor"],
        jitter=cfg["synthetic_jitter"],
        drop_threshold=cfg["synthetic_drop"],
        seed=cfg["seed"],
    )


def _build_provider(cfg: dict) -> _CountingProvider:
    name = cfg["provider"]
    if name == "synthetic":
        inner = SyntheticProvider(_build_profile(cfg))
    elif name == "fixture":
        if not cfg["fixture_dir"]:
            raise click.UsageError("--fixture-dir is required with the fixture provider")
        inner = FixtureProvider(cfg["fixture_dir"], cfg["fixture_provider_id"])
    elif name == "live":
        inner = GoogleVisionProvider(api_key=cfg["api_key"])
    else:
        raise click.UsageError(f"unknown provider {name!r}")
    return _CountingProvider(inner)


def _build_predictor(cfg: dict):
    if cfg["predictor"] == "model" or cfg["model"]:
        if not cfg["model"]:
            raise click.UsageError("--model is required with the model predictor")
        return ModelPredictor(cfg["model"], cfg["sidecar"])
    return OraclePredictor(seed=cfg["seed"])


@click.group()
@click.version_option(version=__version__, prog_name="rotguard")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="INI file with a [rotguard] section.")
@click.pass_context
def cli(ctx, config_path):
    """Rotation-robustness evaluation for black-box vision labeling APIs."""
    ctx.obj = {"config_path": config_path}


@cli.command()
@click.argument("input_path", type=click.Path())
@click.option("--angle", type=int, required=True, help="CCW degrees.")
@click.option("-o", "--output", type=click.Path(), required=True)
def rotate(input_path, angle, output):
    """Rotate an image onto an enlarged black canvas."""
    save_image(output, rotate_with_pad(load_image(input_path), angle))
    click.echo(f"wrote {output}", err=True)


@cli.command()
@click.argument("input_path", type=click.Path())
@click.option("--threshold", type=int, default=DEFAULT_TRIM_THRESHOLD, show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True)
def trim(input_path, threshold, output):
    """Strip black padding rows/columns from the image edges."""
    save_image(output, trim_black_padding(load_image(input_path), threshold))
    click.echo(f"wrote {output}", err=True)


@cli.command()
@click.argument("input_path", type=click.Path())
@click.option("-o", "--output", type=click.Path(), required=True)
@click.option("--model", type=click.Path(), default=None, help="TorchScript artifact.")
@click.option("--sidecar", type=click.Path(), default=None)
@click.option("--oracle-angle", type=int, default=None,
              help="Use the oracle predictor with this known applied rotation.")
@click.option("--oracle-flip180", is_flag=True,
              help="Corrupt the oracle's first pass by 180 degrees.")
@click.option("--trim-threshold", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--print-config", is_flag=True)
@click.pass_context
def correct(ctx, input_path, output, model, sidecar, oracle_angle, oracle_flip180,
            trim_threshold, seed, print_config):
    """Correct an image's orientation with the double-pass pipeline."""
    cfg = effective_config(ctx.obj["config_path"], {
        "model": model,
        "sidecar": sidecar,
        "trim_threshold": trim_threshold,
        "seed": seed,
    })
    if _maybe_print_config(cfg, print_config):
        return
    image = load_image(input_path)
    if cfg["model"]:
        predictor = ModelPredictor(cfg["model"], cfg["sidecar"])
    elif oracle_angle is not None:
        modes = (Flip180(1.0), None) if oracle_flip180 else None
        predictor = OraclePredictor(error_modes=modes, seed=cfg["seed"])
        predictor.register(image, oracle_angle)
    else:
        raise click.UsageError("need --model or --oracle-angle to pick a predictor")
    result = correct_double_pass(predictor, image, cfg["trim_threshold"])
    save_image(output, result.corrected)
    click.echo(json.dumps({
        "pass1": result.pass1_prediction,
        "pass2": result.pass2_prediction,
        "total": result.total_correction,
    }))


@cli.command()
@click.argument("input_path", type=click.Path())
@click.option("--provider", type=click.Choice(["live", "fixture", "synthetic"]),
              default=None)
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--fixture-dir", type=click.Path(), default=None)
@click.option("--fixture-provider-id", default=None)
@click.option("--max-results", type=int, default=None)
@click.option("--angle", type=int, default=0, show_default=True,
              help="Effective rotation registered with the synthetic provider.")
@click.option("--synthetic-labels", type=click.Path(), default=None,
              help="LabelSet JSON with the synthetic base labels.")
@click.option("--synthetic-floor", type=float, default=None)
@click.option("--synthetic-jitter", type=float, default=None)
@click.option("--synthetic-drop", type=float, default=None)
@click.option("--api-key", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--print-config", is_flag=True)
@click.pass_context
def label(ctx, input_path, provider, cache_dir, fixture_dir, fixture_provider_id,
          max_results, angle, synthetic_labels, synthetic_floor, synthetic_jitter,
          synthetic_drop, api_key, seed, print_config):
    """Label an image through the cache and print the LabelSet JSON."""
    cfg = effective_config(ctx.obj["config_path"], {
        "provider": provider,
        "cache_dir": cache_dir,
        "fixture_dir": fixture_dir,
        "fixture_provider_id": fixture_provider_id,
        "max_results": max_results,
        "synthetic_labels": synthetic_labels,
        "synthetic_floor": synthetic_floor,
        "synthetic_jitter": synthetic_jitter,
        "synthetic_drop": synthetic_drop,
        "api_key": api_key,
        "seed": seed,
    })
    if _maybe_print_config(cfg, print_config):
        return
    backend = _build_provider(cfg)
    cache = LabelCache(cfg["cache_dir"])
    request = LabelRequest.from_image(load_image(input_path), cfg["max_results"])
    if hasattr(backend, "register_angle"):
        backend.register_angle(request.image_digest, angle)
    labels = cached_label(cache, backend, request)
    click.echo(json.dumps(labels.to_json(), indent=1))
    click.echo(f"provider calls: {backend.calls}", err=True)


@cli.command()
@click.argument("labels_a", type=click.Path())
@click.argument("labels_b", type=click.Path())
def similarity(labels_a, labels_b):
    """Score two LabelSet JSON files and print the similarity report."""
    report = similarity_index(_load_label_file(labels_a), _load_label_file(labels_b))
    click.echo(json.dumps(report.to_json(), indent=1))


@cli.command()
@click.option("--corpus", type=click.Path(), required=True)
@click.option("--records", "records_path", type=click.Path(), required=True)
@click.option("--aggregates", "aggregates_path", type=click.Path(), required=True)
@click.option("--jsonl", "jsonl_path", type=click.Path(), default=None,
              help="Also write the records as JSON lines.")
@click.option("--provider", type=click.Choice(["live", "fixture", "synthetic"]),
              default=None)
@click.option("--predictor", type=click.Choice(["oracle", "model"]), default=None)
@click.option("--model", type=click.Path(), default=None)
@click.option("--sidecar", type=click.Path(), default=None)
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--fixture-dir", type=click.Path(), default=None)
@click.option("--fixture-provider-id", default=None)
@click.option("--angle-start", type=int, default=None)
@click.option("--angle-stop", type=int, default=None)
@click.option("--angle-step", type=int, default=None)
@click.option("--conditions", default=None, help="Comma-separated: rotated,corrected.")
@click.option("--workers", type=int, default=None)
@click.option("--max-results", type=int, default=None)
@click.option("--synthetic-labels", type=click.Path(), default=None)
@click.option("--synthetic-floor", type=float, default=None)
@click.option("--synthetic-jitter", type=float, default=None)
@click.option("--synthetic-drop", type=float, default=None)
@click.option("--api-key", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--print-config", is_flag=True)
@click.pass_context
def sweep(ctx, corpus, records_path, aggregates_path, jsonl_path, provider, predictor,
          model, sidecar, cache_dir, fixture_dir, fixture_provider_id, angle_start,
          angle_stop, angle_step, conditions, workers, max_results, synthetic_labels,
          synthetic_floor, synthetic_jitter, synthetic_drop, api_key, seed, print_config):
    """Run the full rotation sweep and write record + aggregate CSVs."""
    cfg = effective_config(ctx.obj["config_path"], {
        "provider": provider,
        "predictor": predictor,
        "model": model,
        "sidecar": sidecar,
        "cache_dir": cache_dir,
        "fixture_dir": fixture_dir,
        "fixture_provider_id": fixture_provider_id,
        "angle_start": angle_start,
        "angle_stop": angle_stop,
        "angle_step": angle_step,
        "conditions": conditions,
        "workers": workers,
        "max_results": max_results,
        "synthetic_labels": synthetic_labels,
        "synthetic_floor": synthetic_floor,
        "synthetic_jitter": synthetic_jitter,
        "synthetic_drop": synthetic_drop,
        "api_key": api_key,
        "seed": seed,
    })
    if _maybe_print_config(cfg, print_config):
        return
    condition_tuple = tuple(
        part.strip() for part in cfg["conditions"].split(",") if part.strip()
    )
    config = SweepConfig(
        corpus_dir=corpus,
        angle_start=cfg["angle_start"],
        angle_stop=cfg["angle_stop"],
        angle_step=cfg["angle_step"],
        conditions=condition_tuple,
        parallelism=cfg["workers"],
        seed=cfg["seed"],
        max_results=cfg["max_results"],
    )
    backend = _build_provider(cfg)
    cache = LabelCache(cfg["cache_dir"])
    angle_predictor = (
        _build_predictor(cfg) if "corrected" in condition_tuple else None
    )
    records = run_sweep(config, backend, cache, angle_predictor)
    write_records_csv(records, records_path)
    if jsonl_path:
        write_records_jsonl(records, jsonl_path)
    write_aggregates_csv(aggregate(records), aggregates_path)
    failures = sum(1 for r in records if r.error is not None)
    click.echo(
        f"sweep: {len(records)} records ({failures} failures) over "
        f"{len(config.angles())} angles; provider calls: {backend.calls}",
        err=True,
    )
    click.echo(f"wrote {records_path} and {aggregates_path}", err=True)


@cli.command()
@click.argument("records_path", type=click.Path())
@click.option("-o", "--output", type=click.Path(), required=True,
              help="Aggregate CSV to write.")
def report(records_path, output):
    """Re-aggregate a records CSV into the per-angle summary CSV."""
    try:
        records = read_records_csv(records_path)
    except (OSError, KeyError, ValueError) as exc:
        raise click.UsageError(f"{records_path}: {exc}") from exc
    rows = aggregate(records)
    write_aggregates_csv(rows, output)
    click.echo(f"wrote {output} ({len(rows)} angles)", err=True)


def main(argv=None) -> int:
    """Run the CLI and map errors onto the stable exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 130
    except (AuthError, QuotaError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except (TransportError, ModelLoadError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except FileNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except RotguardError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
