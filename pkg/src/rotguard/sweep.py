"""Rotation-sweep measurement campaigns over an image corpus.

For every corpus image the harness captures baseline labels at 0 degrees,
then walks the configured angle grid. Each (image, angle, condition) task
rotates the image, optionally corrects it through the double-pass
pipeline, labels the result through the cache, and scores the drift
against the baseline. Failures are recorded per task, never fatal: a
sweep is a measurement campaign and must survive quota hiccups.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyCorpusError
from .geometry import circular_diff, load_image, rotate_with_pad
from .pipeline import AnglePredictor, correct_double_pass
from .providers import DEFAULT_MAX_RESULTS, LabelCache, LabelProvider, LabelRequest, cached_label
from .similarity import LabelSet, similarity_index

CONDITION_ROTATED = "rotated"
CONDITION_CORRECTED = "corrected"
CONDITIONS = (CONDITION_ROTATED, CONDITION_CORRECTED)

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")

RECORD_FIELDS = (
    "image_id",
    "applied_angle",
    "condition",
    "percentage_error",
    "predicted_total",
    "residual",
    "error",
)
AGGREGATE_FIELDS = ("angle", "mean_pe_rotated", "mean_pe_corrected", "mean_residual", "n")


@dataclass(frozen=True)
class SweepConfig:
    corpus_dir: str | Path
    angle_start: int = 0
    angle_stop: int = 357
    angle_step: int = 3
    conditions: tuple[str, ...] = CONDITIONS
    parallelism: int = 1
    seed: int = 0
    max_results: int = DEFAULT_MAX_RESULTS

    def __post_init__(self):
        if self.angle_step < 1:
            raise ValueError(f"angle_step must be >= 1, got {self.angle_step}")
        if not 0 <= self.angle_start <= self.angle_stop < 360:
            raise ValueError(
                f"angles must satisfy 0 <= start <= stop < 360, got "
                f"{self.angle_start}..{self.angle_stop}"
            )
        if (self.angle_stop - self.angle_start) % self.angle_step:
            raise ValueError(
                f"angle_step {self.angle_step} does not divide the span "
                f"{self.angle_stop - self.angle_start}"
            )
        unknown = set(self.conditions) - set(CONDITIONS)
        if unknown or not self.conditions:
            raise ValueError(f"conditions must be a non-empty subset of {CONDITIONS}")
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism}")

    def angles(self) -> list[int]:
        return list(range(self.angle_start, self.angle_stop + 1, self.angle_step))


@dataclass(frozen=True)
class SweepRecord:
    image_id: str
    applied_angle: int
    condition: str
    percentage_error: float | None
    predicted_total: int | None = None
    residual: int | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return {field: getattr(self, field) for field in RECORD_FIELDS}


@dataclass(frozen=True)
class AngleAggregate:
    angle: int
    mean_pe_rotated: float | None
    mean_pe_corrected: float | None
    mean_residual: float | None
    n: int


def list_corpus(corpus_dir: str | Path) -> list[Path]:
    root = Path(corpus_dir)
    if not root.is_dir():
        raise EmptyCorpusError(f"corpus directory {root} does not exist")
    paths = sorted(
        p for p in root.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS and p.is_file()
    )
    if not paths:
        raise EmptyCorpusError(f"no {'/'.join(IMAGE_EXTENSIONS)} images in {root}")
    return paths


def run_sweep(
    config: SweepConfig,
    provider: LabelProvider,
    cache: LabelCache,
    predictor: AnglePredictor | None = None,
) -> list[SweepRecord]:
    """Execute the sweep and return one record per (image, angle, condition).

    Results are sorted by (image_id, angle, condition) and deterministic for
    the fixture/synthetic providers regardless of ``parallelism``. Failed
    tasks carry an error marker instead of measurements.
    """
    if CONDITION_CORRECTED in config.conditions and predictor is None:
        raise ValueError("the corrected condition needs an angle predictor")
    paths = list_corpus(config.corpus_dir)
    angles = config.angles()

    records: list[SweepRecord] = []
    tasks: list[tuple[str, np.ndarray, LabelSet, int, str]] = []
    for path in paths:
        image_id = path.name
        try:
            image = load_image(path)
            baseline = _labels_for(provider, cache, image, 0, config.max_results)
        except Exception as exc:  # record every planned measurement as failed
            for angle in angles:
                for condition in config.conditions:
                    records.append(
                        _failure(image_id, angle, condition, exc, prefix="baseline")
                    )
            continue
        for angle in angles:
            for condition in config.conditions:
                tasks.append((image_id, image, baseline, angle, condition))

    def run_task(task) -> SweepRecord:
        image_id, image, baseline, angle, condition = task
        try:
            return _measure(
                config, provider, cache, predictor, image_id, image, baseline, angle, condition
            )
        except Exception as exc:
            return _failure(image_id, angle, condition, exc)

    if config.parallelism > 1 and tasks:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            records.extend(pool.map(run_task, tasks))
    else:
        records.extend(map(run_task, tasks))

    records.sort(key=lambda r: (r.image_id, r.applied_angle, r.condition))
    return records


def _failure(image_id, angle, condition, exc, prefix=None) -> SweepRecord:
    note = f"{type(exc).__name__}: {exc}"
    if prefix:
        note = f"{prefix}: {note}"
    return SweepRecord(image_id, angle, condition, None, None, None, error=note)


def _labels_for(provider, cache, image, effective_angle, max_results) -> LabelSet:
    request = LabelRequest.from_image(image, max_results)
    register = getattr(provider, "register_angle", None)
    if register is not None:
        register(request.image_digest, effective_angle)
    return cached_label(cache, provider, request)


def _measure(
    config, provider, cache, predictor, image_id, image, baseline, angle, condition
) -> SweepRecord:
    rotated = rotate_with_pad(image, angle)
    if condition == CONDITION_ROTATED:
        labels = _labels_for(provider, cache, rotated, angle, config.max_results)
        report = similarity_index(baseline, labels)
        return SweepRecord(image_id, angle, condition, report.percentage_error)

    register = getattr(predictor, "register", None)
    if register is not None:
        register(rotated, angle)
    result = correct_double_pass(predictor, rotated)
    offset = (angle - result.total_correction) % 360
    labels = _labels_for(provider, cache, result.corrected, offset, config.max_results)
    report = similarity_index(baseline, labels)
    return SweepRecord(
        image_id,
        angle,
        condition,
        report.percentage_error,
        predicted_total=result.total_correction,
        residual=circular_diff(angle, result.total_correction),
    )


def aggregate(records: list[SweepRecord]) -> list[AngleAggregate]:
    """Per-angle means over successful records, ordered by angle.

    ``n`` counts distinct images with at least one successful record at the
    angle; for a complete run it equals the corpus size for every angle.
    """
    by_angle: dict[int, list[SweepRecord]] = {}
    for record in records:
        if record.error is None:
            by_angle.setdefault(record.applied_angle, []).append(record)
    out = []
    for angle in sorted(by_angle):
        bucket = by_angle[angle]
        pe_rotated = [r.percentage_error for r in bucket if r.condition == CONDITION_ROTATED]
        pe_corrected = [
            r.percentage_error for r in bucket if r.condition == CONDITION_CORRECTED
        ]
        residuals = [r.residual for r in bucket if r.residual is not None]
        out.append(
            AngleAggregate(
                angle=angle,
                mean_pe_rotated=_mean(pe_rotated),
                mean_pe_corrected=_mean(pe_corrected),
                mean_residual=_mean(residuals),
                n=len({r.image_id for r in bucket}),
            )
        )
    return out


def _mean(values) -> float | None:
    return sum(values) / len(values) if values else None


def _cell(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def write_records_csv(records: list[SweepRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(RECORD_FIELDS)
        for r in records:
            writer.writerow([_cell(getattr(r, field)) for field in RECORD_FIELDS])


def write_records_jsonl(records: list[SweepRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for r in records:
            handle.write(json.dumps(r.to_json()) + "\n")


def read_records_csv(path: str | Path) -> list[SweepRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            records.append(
                SweepRecord(
                    image_id=row["image_id"],
                    applied_angle=int(row["applied_angle"]),
                    condition=row["condition"],
                    percentage_error=float(row["percentage_error"])
                    if row["percentage_error"]
                    else None,
                    predicted_total=int(row["predicted_total"])
                    if row["predicted_total"]
                    else None,
                    residual=int(row["residual"]) if row["residual"] else None,
                    error=row["error"] or None,
                )
            )
    return records


def write_aggregates_csv(aggregates: list[AngleAggregate], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(AGGREGATE_FIELDS)
        for a in aggregates:
            writer.writerow([_cell(getattr(a, field)) for field in AGGREGATE_FIELDS])
