"""Confidence-weighted similarity scoring between two label sets.

A baseline label set's confidences are normalized into weights summing to
100. Each label the test set shares with the baseline contributes its
weight, scaled down by the confidence ratio when the test set is less
confident, and capped at the weight otherwise. Labels the test set adds on
its own contribute nothing, making the score a high-punishment,
zero-reward measure of label drift.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import EmptyBaselineError, InvalidScoreError


@dataclass(frozen=True)
class LabelSet:
    """Ordered (label, confidence) pairs; labels unique, confidences in (0, 1]."""

    entries: tuple[tuple[str, float], ...]

    def __len__(self) -> int:
        return len(self.entries)

    def labels(self) -> list[str]:
        return [label for label, _ in self.entries]

    def confidences(self) -> dict[str, float]:
        return dict(self.entries)

    def to_json(self) -> dict:
        return {
            "labels": [
                {"description": label, "score": score} for label, score in self.entries
            ]
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "LabelSet":
        if not isinstance(doc, Mapping) or not isinstance(doc.get("labels"), list):
            raise ValueError("expected an object with a 'labels' array")
        raw = []
        for item in doc["labels"]:
            if (
                not isinstance(item, Mapping)
                or not isinstance(item.get("description"), str)
                or not isinstance(item.get("score"), (int, float))
                or isinstance(item.get("score"), bool)
            ):
                raise ValueError(f"malformed label record: {item!r}")
            raw.append((item["description"], item["score"]))
        return normalize_labels(raw)


@dataclass(frozen=True)
class LabelScore:
    label: str
    weight: float
    similarity_value: float
    present_in_img2: bool


@dataclass(frozen=True)
class SimilarityReport:
    """Similarity index, its complement, and the per-label breakdown."""

    similarity_index: float
    percentage_error: float
    per_label: tuple[LabelScore, ...]

    def to_json(self) -> dict:
        return {
            "similarity_index": self.similarity_index,
            "percentage_error": self.percentage_error,
            "per_label": [
                {
                    "label": row.label,
                    "weight": row.weight,
                    "similarity_value": row.similarity_value,
                    "present_in_img2": row.present_in_img2,
                }
                for row in self.per_label
            ],
        }


def normalize_labels(raw: Iterable[tuple[str, float]]) -> LabelSet:
    """Canonicalize raw (text, score) pairs into a LabelSet.

    Scores may arrive on the (0, 1] or (0, 100] scale; any score above 1
    switches the whole batch to percent interpretation. Labels are
    case-folded and trimmed; duplicates keep their maximum confidence.
    The result is sorted by descending confidence (stable for ties).
    """
    cleaned: list[tuple[str, float]] = []
    for text, score in raw:
        value = float(score)
        if not value > 0 or value > 100:
            raise InvalidScoreError(f"score {score!r} for {text!r} not in (0, 100]")
        cleaned.append((str(text).strip().casefold(), value))
    scale = 0.01 if any(score > 1.0 for _, score in cleaned) else 1.0
    merged: dict[str, float] = {}
    for label, score in cleaned:
        value = score * scale
        if label not in merged or value > merged[label]:
            merged[label] = value
    ordered = sorted(merged.items(), key=lambda pair: -pair[1])
    return LabelSet(tuple(ordered))


def weights(img1: LabelSet) -> dict[str, float]:
    """Per-label share of 100, proportional to the baseline confidences."""
    if not img1.entries:
        raise EmptyBaselineError("baseline label set is empty; weights are undefined")
    total = sum(confidence for _, confidence in img1.entries)
    return {label: 100.0 * confidence / total for label, confidence in img1.entries}


def similarity_index(img1: LabelSet, img2: LabelSet) -> SimilarityReport:
    """Score how closely ``img2``'s labels track the ``img1`` baseline.

    Common labels contribute weight(x) * conf2(x)/conf1(x), capped at
    weight(x); labels only in img2 contribute nothing. The percentage
    error is the exact complement of the similarity index.
    """
    label_weights = weights(img1)
    img2_confidence = img2.confidences()
    rows: list[LabelScore] = []
    total = 0.0
    for label, conf1 in img1.entries:
        weight = label_weights[label]
        conf2 = img2_confidence.get(label)
        if conf2 is None:
            rows.append(LabelScore(label, weight, 0.0, False))
            continue
        value = weight * (conf2 / conf1) if conf2 < conf1 else weight
        total += value
        rows.append(LabelScore(label, weight, value, True))
    index = min(max(total, 0.0), 100.0)
    return SimilarityReport(index, 100.0 - index, tuple(rows))
