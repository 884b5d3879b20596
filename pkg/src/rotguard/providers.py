"""Labeling backends behind one interface, fronted by an on-disk cache.

Three providers: the live Google Cloud Vision REST client, a fixture
replayer for recorded responses, and a synthetic labeler that degrades a
base label set as a function of rotation angle. Responses are cached one
JSON record per key in a content-addressed directory, so sweeps are
resumable and never re-bill the live API.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Protocol

import numpy as np
import requests

from .errors import (
    AuthError,
    CacheCorruptError,
    FixtureMissError,
    QuotaError,
    TransportError,
    UnknownImageError,
)
from .geometry import circular_diff, encode_png
from .similarity import LabelSet, normalize_labels

VISION_ENDPOINT = "https://vision.googleapis.com/v1/images:annotate"
DEFAULT_MAX_RESULTS = 20


@dataclass(frozen=True)
class LabelRequest:
    """An encoded image plus the label-count ceiling, as sent on the wire."""

    png: bytes
    max_results: int = DEFAULT_MAX_RESULTS

    def __post_init__(self):
        if self.max_results < 1:
            raise ValueError(f"max_results must be >= 1, got {self.max_results}")

    @classmethod
    def from_image(cls, image: np.ndarray, max_results: int = DEFAULT_MAX_RESULTS):
        return cls(encode_png(image), max_results)

    @property
    def image_digest(self) -> str:
        return hashlib.sha256(self.png).hexdigest()


@dataclass(frozen=True)
class CacheKey:
    image_digest: str
    provider_id: str
    max_results: int

    @property
    def digest(self) -> str:
        material = f"{self.image_digest}\n{self.provider_id}\n{self.max_results}"
        return hashlib.sha256(material.encode("utf-8")).hexdigest()


class LabelProvider(Protocol):
    provider_id: str

    def label(self, request: LabelRequest) -> LabelSet: ...


def _parse_record(doc, source: str) -> LabelSet:
    try:
        return LabelSet.from_json(doc)
    except ValueError as exc:
        raise CacheCorruptError(f"{source}: {exc}") from exc


def _load_record(path: Path) -> LabelSet:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CacheCorruptError(f"{path}: {exc}") from exc
    return _parse_record(doc, str(path))


class LabelCache:
    """Content-addressed store of LabelSet records, one JSON file per key.

    Writes go to a temp file and are renamed into place, so concurrent
    readers never observe partial records.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path_for(self, key: CacheKey) -> Path:
        return self.directory / f"{key.digest}.json"

    def get(self, key: CacheKey) -> LabelSet | None:
        path = self.path_for(key)
        if not path.exists():
            return None
        return _load_record(path)

    def put(self, key: CacheKey, labels: LabelSet) -> None:
        path = self.path_for(key)
        tmp = path.with_name(f".{path.name}.{uuid.uuid4().hex}.tmp")
        tmp.write_text(json.dumps(labels.to_json(), indent=1), encoding="utf-8")
        os.replace(tmp, path)


def cached_label(cache: LabelCache, provider: LabelProvider, request: LabelRequest) -> LabelSet:
    """Return the cached response for ``request``, calling the provider on a miss."""
    key = CacheKey(request.image_digest, provider.provider_id, request.max_results)
    hit = cache.get(key)
    if hit is not None:
        return hit
    labels = provider.label(request)
    cache.put(key, labels)
    return labels


class GoogleVisionProvider:
    """Live LABEL_DETECTION client for the Cloud Vision REST endpoint.

    Auth comes from an API key (``GOOGLE_API_KEY``, sent as the ``key``
    query parameter) or a bearer token (``GOOGLE_BEARER_TOKEN``).
    Transport failures and 5xx responses are retried with exponential
    backoff; quota responses surface immediately as QuotaError.
    """

    provider_id = "google-vision"

    def __init__(
        self,
        api_key: str | None = None,
        bearer_token: str | None = None,
        endpoint: str = VISION_ENDPOINT,
        session=None,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        max_inflight: int = 4,
        requests_per_minute: int | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
        timeout: float = 30.0,
    ):
        self.api_key = api_key or os.environ.get("GOOGLE_API_KEY")
        self.bearer_token = bearer_token or os.environ.get("GOOGLE_BEARER_TOKEN")
        if not self.api_key and not self.bearer_token:
            raise AuthError(
                "no credentials: set GOOGLE_API_KEY or GOOGLE_BEARER_TOKEN"
            )
        self.endpoint = endpoint
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self._session = session if session is not None else requests.Session()
        self._sleep = sleep
        self._clock = clock
        self._inflight = threading.BoundedSemaphore(max_inflight)
        self._rpm = requests_per_minute
        self._stamps: deque[float] = deque()
        self._stamp_lock = threading.Lock()

    def label(self, request: LabelRequest) -> LabelSet:
        body = {
            "requests": [
                {
                    "image": {"content": base64.b64encode(request.png).decode("ascii")},
                    "features": [
                        {"type": "LABEL_DETECTION", "maxResults": request.max_results}
                    ],
                }
            ]
        }
        params = {"key": self.api_key} if self.api_key else {}
        headers = (
            {"Authorization": f"Bearer {self.bearer_token}"} if self.bearer_token else {}
        )
        last_failure: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff_base * 2 ** (attempt - 1))
            self._throttle()
            try:
                with self._inflight:
                    response = self._session.post(
                        self.endpoint,
                        params=params,
                        headers=headers,
                        json=body,
                        timeout=self.timeout,
                    )
            except (requests.RequestException, OSError) as exc:
                last_failure = exc
                continue
            status = response.status_code
            if status == 200:
                return self._parse(response.json(), request.max_results)
            text = response.text or ""
            if status == 429 or "RESOURCE_EXHAUSTED" in text or "rateLimitExceeded" in text:
                raise QuotaError(f"quota/rate limit from API (HTTP {status})")
            if status in (401, 403):
                raise AuthError(f"credentials rejected (HTTP {status})")
            if 500 <= status < 600:
                last_failure = TransportError(f"server error HTTP {status}")
                continue
            raise TransportError(f"unexpected HTTP {status}: {text[:200]}")
        raise TransportError(
            f"giving up after {self.max_retries + 1} attempts: {last_failure}"
        )

    def _throttle(self) -> None:
        if not self._rpm:
            return
        while True:
            with self._stamp_lock:
                now = self._clock()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self._rpm:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            self._sleep(max(wait, 0.01))

    @staticmethod
    def _parse(doc, max_results: int) -> LabelSet:
        try:
            entry = doc["responses"][0]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed API response: {exc}") from exc
        if "error" in entry:
            err = entry["error"]
            status = str(err.get("status", ""))
            message = f"API error: {err.get('message', err)}"
            if status == "RESOURCE_EXHAUSTED":
                raise QuotaError(message)
            if status in ("UNAUTHENTICATED", "PERMISSION_DENIED"):
                raise AuthError(message)
            raise TransportError(message)
        annotations = entry.get("labelAnnotations", [])
        try:
            raw = [(item["description"], item["score"]) for item in annotations]
        except (KeyError, TypeError) as exc:
            raise TransportError(f"malformed label annotation: {exc}") from exc
        labels = normalize_labels(raw)
        return LabelSet(labels.entries[:max_results])


class FixtureProvider:
    """Replays recorded responses from a cache-format directory.

    ``provider_id`` must match the provider the fixtures were recorded
    against (they are keyed into the same content-addressed namespace), so
    a directory recorded through the live client replays transparently.
    """

    def __init__(self, directory: str | Path, provider_id: str = "google-vision"):
        self.directory = Path(directory)
        self.provider_id = provider_id

    def label(self, request: LabelRequest) -> LabelSet:
        key = CacheKey(request.image_digest, self.provider_id, request.max_results)
        path = self.directory / f"{key.digest}.json"
        if not path.exists():
            raise FixtureMissError(
                f"no fixture for image {request.image_digest[:12]}... "
                f"(provider {self.provider_id}, max_results {request.max_results})"
            )
        return _load_record(path)


@dataclass(frozen=True)
class DegradationProfile:
    """How label confidences fall off as an image turns away from upright.

    ``floors`` maps each base label to its decay multiplier at 180 degrees;
    decay interpolates linearly from 1.0 at 0 degrees. Labels whose decayed
    confidence falls below ``drop_threshold`` are omitted.
    """

    base_labels: LabelSet
    floors: Mapping[str, float]
    drop_threshold: float = 0.0

    def __post_init__(self):
        for label, confidence in self.base_labels.entries:
            floor = self.floors.get(label)
            if floor is None:
                raise ValueError(f"no decay floor for base label {label!r}")
            if not 0.0 <= floor <= 1.0:
                raise ValueError(f"floor for {label!r} must be in [0, 1], got {floor}")
            if confidence < self.drop_threshold:
                raise ValueError(
                    f"base confidence {confidence} of {label!r} is below the "
                    f"drop threshold {self.drop_threshold}; the profile would "
                    "not reproduce its own base labels at 0 degrees"
                )

    def decay(self, label: str, distance: int) -> float:
        return 1.0 - (1.0 - self.floors[label]) * (distance / 180.0)

    @classmethod
    def linear(
        cls,
        base_labels: LabelSet,
        floor: float = 0.35,
        jitter: float = 0.15,
        drop_threshold: float = 0.3,
        seed: int = 0,
    ) -> "DegradationProfile":
        """Per-label linear decay with a seeded jitter around ``floor``."""
        rng = np.random.default_rng(seed)
        floors = {
            label: float(np.clip(floor + rng.uniform(-jitter, jitter), 0.0, 1.0))
            for label, _ in base_labels.entries
        }
        return cls(base_labels, floors, drop_threshold)


def synthetic_label(profile: DegradationProfile, angle: int) -> LabelSet:
    """Degrade the profile's base labels for an image rotated by ``angle``."""
    distance = circular_diff(angle, 0)
    entries = []
    for label, confidence in profile.base_labels.entries:
        value = confidence * profile.decay(label, distance)
        if value >= profile.drop_threshold and value > 0.0:
            entries.append((label, value))
    entries.sort(key=lambda pair: -pair[1])
    return LabelSet(tuple(entries))


class SyntheticProvider:
    """Angle-degradation labeler for quota-free experiments.

    The provider interface receives images, but the degradation is a
    function of the rotation angle, so callers register each encoded
    image's effective angle (digest -> degrees) before labeling it.
    Identical bytes therefore always yield identical labels.
    """

    def __init__(self, profile: DegradationProfile, provider_id: str = "synthetic"):
        self.profile = profile
        self.provider_id = provider_id
        self._angles: dict[str, int] = {}
        self._lock = threading.Lock()

    def register_angle(self, image_digest: str, angle: int) -> None:
        with self._lock:
            self._angles[image_digest] = angle % 360

    def label(self, request: LabelRequest) -> LabelSet:
        with self._lock:
            angle = self._angles.get(request.image_digest)
        if angle is None:
            raise UnknownImageError(
                f"no angle registered for image {request.image_digest[:12]}..."
            )
        labels = synthetic_label(self.profile, angle)
        return LabelSet(labels.entries[: request.max_results])


def default_degradation_profile(
    floor: float = 0.35,
    jitter: float = 0.15,
    drop_threshold: float = 0.3,
    seed: int = 0,
) -> DegradationProfile:
    """Street-scene-flavored base labels for out-of-the-box synthetic runs."""
    base = normalize_labels(
        [
            ("street", 0.95),
            ("road", 0.92),
            ("sky", 0.88),
            ("building", 0.85),
            ("asphalt", 0.80),
            ("tree", 0.74),
            ("car", 0.70),
            ("sidewalk", 0.66),
        ]
    )
    return DegradationProfile.linear(base, floor, jitter, drop_threshold, seed)
