"""Heterogeneous (digital / print-scanned) morph-attack evaluation toolkit."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ClassifierRecord,
    ImageBuffer,
    ImposterScoreSet,
    InputError,
    Label,
    LandmarkSet,
    MediaProvenance,
    MorphScoreSet,
    ScenarioConfig,
    SimilarityRecord,
)
from .metrics import (  # noqa: E402
    calibrate_threshold,
    compute_roc,
    ema_decay,
    equal_error_rate,
    macer_at_bpcer,
    mmpmr,
    prodavg_mmpmr,
)

__all__ = [
    "ClassifierRecord",
    "ImageBuffer",
    "ImposterScoreSet",
    "InputError",
    "Label",
    "LandmarkSet",
    "MediaProvenance",
    "MorphScoreSet",
    "ScenarioConfig",
    "SimilarityRecord",
    "__version__",
    "calibrate_threshold",
    "compute_roc",
    "ema_decay",
    "equal_error_rate",
    "macer_at_bpcer",
    "mmpmr",
    "prodavg_mmpmr",
]
