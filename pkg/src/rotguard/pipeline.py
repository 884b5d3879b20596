"""Angle predictors and the double-pass orientation-correction pipeline.

A predictor estimates the counter-clockwise rotation that was applied to
an upright image; the pipeline rotates by the complement, trims the
padding, then feeds the result through the predictor once more. The
second pass exists because orientation models occasionally answer 180
degrees off; an exact second pass cancels that error via the modular sum
of the two predictions.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import (
    DegenerateImageError,
    ModelLoadError,
    ShapeError,
    UnknownImageError,
)
from .geometry import (
    DEFAULT_TRIM_THRESHOLD,
    ensure_image,
    normalize_angle,
    resize,
    rotate_with_pad,
    trim_black_padding,
)

DEFAULT_INPUT_SIZE = 224
# below this, resized content is meaningless to any predictor
MIN_PREDICTION_SIZE = 8

ANGLE_CLASSES = 360


@runtime_checkable
class AnglePredictor(Protocol):
    input_width: int
    input_height: int

    def predict(self, image: np.ndarray) -> int: ...


@dataclass(frozen=True)
class Flip180:
    """Corrupt a prediction to its 180-degree complement with probability p."""

    probability: float = 1.0


@dataclass(frozen=True)
class GaussianJitter:
    """Add rounded zero-mean gaussian noise to the prediction."""

    sigma: float = 5.0


ErrorMode = Flip180 | GaussianJitter | None


def _pixel_digest(image: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.asarray(image.shape, dtype=np.int64).tobytes())
    h.update(np.ascontiguousarray(image).tobytes())
    return h.hexdigest()


def _draw_seed(seed: int, digest: str, pass_index: int) -> int:
    material = f"{seed}:{digest}:{pass_index}".encode("ascii")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


class OraclePredictor:
    """Ground-truth-backed predictor for isolating pipeline logic in tests.

    Images are identified by a digest of their pixels; ``register`` stores
    the applied rotation for both the full-resolution image and its
    predictor-input-sized resize (the pipeline predicts on the resized
    copy). When an unregistered image arrives, it is treated as the output
    of this thread's previous correction and its offset is tracked
    arithmetically, which is exactly the double-pass flow.

    ``error_modes`` is one mode for all passes, or a sequence indexed by
    pass number (last entry repeats); all corruption draws are keyed on
    (seed, registered digest, pass), so outcomes are deterministic
    regardless of call order or worker count.
    """

    def __init__(
        self,
        input_width: int = DEFAULT_INPUT_SIZE,
        input_height: int = DEFAULT_INPUT_SIZE,
        error_modes: Sequence[ErrorMode] | ErrorMode = None,
        seed: int = 0,
    ):
        self.input_width = input_width
        self.input_height = input_height
        if error_modes is None or isinstance(error_modes, (Flip180, GaussianJitter)):
            error_modes = (error_modes,)
        self._modes: tuple[ErrorMode, ...] = tuple(error_modes) or (None,)
        self._seed = seed
        self._truth: dict[str, int] = {}
        self._lock = threading.Lock()
        self._local = threading.local()

    def register(self, image: np.ndarray, angle: int) -> None:
        image = ensure_image(image)
        value = normalize_angle(angle)
        resized = resize(image, self.input_width, self.input_height)
        with self._lock:
            self._truth[_pixel_digest(image)] = value
            self._truth[_pixel_digest(resized)] = value
        # a registration starts a fresh correction sequence on this thread
        self._local.chain = None

    def predict(self, image: np.ndarray) -> int:
        digest = _pixel_digest(ensure_image(image))
        with self._lock:
            truth = self._truth.get(digest)
        chain = getattr(self._local, "chain", None)
        if truth is not None and (chain is None or chain[1] != truth):
            root, offset, pass_index = digest, truth, 1
        elif chain is not None:
            # either an unregistered intermediate, or bytes that collided back
            # onto a registered image mid-sequence (a zero-rotation pass); the
            # tracked offset agrees with the registration, so continue the chain
            root, offset, pass_index = chain
        else:
            raise UnknownImageError(
                "image was never registered and no prior prediction exists "
                "on this thread to track it from"
            )
        answer = self._corrupt(offset, root, pass_index)
        self._local.chain = (root, (offset - answer) % 360, pass_index + 1)
        return answer

    def _corrupt(self, true_angle: int, root_digest: str, pass_index: int) -> int:
        mode = self._modes[min(pass_index, len(self._modes)) - 1]
        if mode is None:
            return true_angle
        rng = np.random.default_rng(_draw_seed(self._seed, root_digest, pass_index))
        if isinstance(mode, Flip180):
            if rng.random() < mode.probability:
                return (true_angle + 180) % 360
            return true_angle
        if isinstance(mode, GaussianJitter):
            return (true_angle + round(rng.normal(0.0, mode.sigma))) % 360
        raise TypeError(f"unsupported error mode: {mode!r}")


class ModelPredictor:
    """Runs a serialized 360-class TorchScript classifier.

    The sidecar JSON next to the artifact records the preprocessing
    contract: tensor layout ("nchw" or "nhwc"), per-channel mean/scale
    applied to [0, 1] pixels, whether the class index must be inverted
    (models trained to output the correcting rotation instead of the
    applied one), and the input dimensions. The output length is checked
    at load time, before any prediction.
    """

    def __init__(self, model_path: str | Path, sidecar_path: str | Path | None = None):
        model_path = Path(model_path)
        sidecar_path = (
            Path(sidecar_path) if sidecar_path else model_path.with_suffix(
                model_path.suffix + ".json"
            )
        )
        try:
            sidecar = json.loads(Path(sidecar_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelLoadError(f"cannot read sidecar {sidecar_path}: {exc}") from exc
        try:
            self.layout = str(sidecar["layout"]).lower()
            self.mean = np.asarray(sidecar["mean"], dtype=np.float32)
            self.scale = np.asarray(sidecar["scale"], dtype=np.float32)
            self.invert_prediction = bool(sidecar["invert_prediction"])
        except KeyError as exc:
            raise ModelLoadError(f"sidecar {sidecar_path} missing key {exc}") from exc
        if self.layout not in ("nchw", "nhwc"):
            raise ModelLoadError(f"unknown layout {self.layout!r}")
        if self.mean.shape != (3,) or self.scale.shape != (3,):
            raise ModelLoadError("mean and scale must each have 3 entries")
        self.input_width = int(sidecar.get("input_width", DEFAULT_INPUT_SIZE))
        self.input_height = int(sidecar.get("input_height", DEFAULT_INPUT_SIZE))

        try:
            import torch
        except ImportError as exc:
            raise ModelLoadError(
                "torch is required to run model predictors (pip install rotguard[model])"
            ) from exc
        self._torch = torch
        try:
            self._module = torch.jit.load(str(model_path), map_location="cpu")
        except (OSError, RuntimeError, ValueError) as exc:
            raise ModelLoadError(f"cannot load model {model_path}: {exc}") from exc
        self._module.eval()

        probe = np.zeros((self.input_height, self.input_width, 3), dtype=np.uint8)
        logits = self._logits(probe)
        if logits.size != ANGLE_CLASSES or logits.shape[-1] != ANGLE_CLASSES:
            raise ShapeError(
                f"model output has shape {tuple(logits.shape)}, expected "
                f"{ANGLE_CLASSES} classes"
            )

    def _logits(self, image: np.ndarray) -> np.ndarray:
        x = image.astype(np.float32) / 255.0
        x = (x - self.mean) / self.scale
        if self.layout == "nchw":
            x = np.transpose(x, (2, 0, 1))
        tensor = self._torch.from_numpy(np.ascontiguousarray(x)).unsqueeze(0)
        with self._torch.inference_mode():
            out = self._module(tensor)
        return out.detach().cpu().numpy()

    def predict(self, image: np.ndarray) -> int:
        image = ensure_image(image)
        h, w = image.shape[:2]
        if (w, h) != (self.input_width, self.input_height):
            image = resize(image, self.input_width, self.input_height)
        cls = int(np.argmax(self._logits(image).reshape(-1)))
        if self.invert_prediction:
            cls = (ANGLE_CLASSES - cls) % ANGLE_CLASSES
        return cls


@dataclass(frozen=True)
class CorrectionResult:
    corrected: np.ndarray
    pass1_prediction: int
    pass2_prediction: int
    total_correction: int


def predict_angle(predictor: AnglePredictor, image: np.ndarray) -> int:
    """Ask the predictor for the CCW rotation applied to ``image``."""
    value = int(predictor.predict(ensure_image(image)))
    return normalize_angle(value)


def correct_once(
    predictor: AnglePredictor,
    image: np.ndarray,
    trim_threshold: int = DEFAULT_TRIM_THRESHOLD,
) -> tuple[np.ndarray, int]:
    """Predict on a resized copy, counter-rotate the full-resolution image, trim.

    Returns (corrected image, predicted angle). The original image is never
    downscaled: prediction happens on a resized copy, the correction on the
    original.
    """
    image = ensure_image(image)
    h, w = image.shape[:2]
    if w < MIN_PREDICTION_SIZE or h < MIN_PREDICTION_SIZE:
        raise DegenerateImageError(
            f"{w}x{h} image is below the {MIN_PREDICTION_SIZE}x"
            f"{MIN_PREDICTION_SIZE} prediction minimum"
        )
    probe = resize(image, predictor.input_width, predictor.input_height)
    predicted = normalize_angle(int(predictor.predict(probe)))
    rotated = rotate_with_pad(image, (360 - predicted) % 360)
    corrected = trim_black_padding(rotated, trim_threshold)
    return corrected, predicted


def correct_double_pass(
    predictor: AnglePredictor,
    image: np.ndarray,
    trim_threshold: int = DEFAULT_TRIM_THRESHOLD,
) -> CorrectionResult:
    """Run correct_once twice, feeding the first output back through the model."""
    first, pass1 = correct_once(predictor, image, trim_threshold)
    final, pass2 = correct_once(predictor, first, trim_threshold)
    return CorrectionResult(final, pass1, pass2, (pass1 + pass2) % 360)
