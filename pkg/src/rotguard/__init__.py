"""Rotation-robustness evaluation and orientation correction toolkit.

Generates rotated variants of images, measures how far a black-box vision
labeling API drifts from the upright baseline, and corrects orientation
with a double-pass angle-prediction pipeline.
"""

__version__ = "0.1.0"

from .errors import (
    AllBlackError,
    AuthError,
    CacheCorruptError,
    DegenerateImageError,
    EmptyBaselineError,
    EmptyCorpusError,
    FixtureMissError,
    InvalidImageError,
    InvalidScoreError,
    ModelLoadError,
    QuotaError,
    RotguardError,
    ShapeError,
    TransportError,
    UnknownImageError,
)
from .geometry import (
    DEFAULT_TRIM_THRESHOLD,
    circular_diff,
    decode_image,
    encode_png,
    load_image,
    normalize_angle,
    resize,
    rotate_with_pad,
    rotated_bounds,
    save_image,
    trim_black_padding,
)
from .pipeline import (
    AnglePredictor,
    CorrectionResult,
    Flip180,
    GaussianJitter,
    ModelPredictor,
    OraclePredictor,
    correct_double_pass,
    correct_once,
    predict_angle,
)
from .providers import (
    CacheKey,
    DegradationProfile,
    FixtureProvider,
    GoogleVisionProvider,
    LabelCache,
    LabelRequest,
    SyntheticProvider,
    cached_label,
    default_degradation_profile,
    synthetic_label,
)
from .similarity import (
    LabelScore,
    LabelSet,
    SimilarityReport,
    normalize_labels,
    similarity_index,
    weights,
)
from .sweep import (
    AngleAggregate,
    SweepConfig,
    SweepRecord,
    aggregate,
    read_records_csv,
    run_sweep,
    write_aggregates_csv,
    write_records_csv,
    write_records_jsonl,
)

__all__ = [
    "__version__",
    # errors
    "RotguardError",
    "InvalidImageError",
    "AllBlackError",
    "EmptyBaselineError",
    "InvalidScoreError",
    "AuthError",
    "QuotaError",
    "TransportError",
    "FixtureMissError",
    "CacheCorruptError",
    "UnknownImageError",
    "ModelLoadError",
    "ShapeError",
    "DegenerateImageError",
    "EmptyCorpusError",
    # geometry
    "DEFAULT_TRIM_THRESHOLD",
    "circular_diff",
    "decode_image",
    "encode_png",
    "load_image",
    "normalize_angle",
    "resize",
    "rotate_with_pad",
    "rotated_bounds",
    "save_image",
    "trim_black_padding",
    # similarity
    "LabelSet",
    "LabelScore",
    "SimilarityReport",
    "normalize_labels",
    "similarity_index",
    "weights",
    # providers
    "CacheKey",
    "DegradationProfile",
    "FixtureProvider",
    "GoogleVisionProvider",
    "LabelCache",
    "LabelRequest",
    "SyntheticProvider",
    "cached_label",
    "default_degradation_profile",
    "synthetic_label",
    # pipeline
    "AnglePredictor",
    "CorrectionResult",
    "Flip180",
    "GaussianJitter",
    "ModelPredictor",
    "OraclePredictor",
    "correct_double_pass",
    "correct_once",
    "predict_angle",
    # sweep
    "AngleAggregate",
    "SweepConfig",
    "SweepRecord",
    "aggregate",
    "read_records_csv",
    "run_sweep",
    "write_aggregates_csv",
    "write_records_csv",
    "write_records_jsonl",
]
