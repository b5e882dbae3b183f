"""Domain types shared across the toolkit."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

N_LANDMARKS = 68


class InputError(ValueError):
    """Raised for malformed or inconsistent input data.

    ``line`` carries the 1-based source line when the error came from a file.
    """

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.message = message
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class MediaProvenance(enum.Enum):
    DIGITAL = "digital"
    PRINT_SCANNED = "print-scanned"

    @classmethod
    def parse(cls, text: str) -> "MediaProvenance":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise InputError(f"unknown provenance {text!r} (expected 'digital' or 'print-scanned')") from None

    @property
    def short(self) -> str:
        return "D" if self is MediaProvenance.DIGITAL else "PS"


@dataclass(frozen=True)
class ScenarioConfig:
    """Provenance pairing of the morph (first) and the bona fide (second)."""

    morph_source: MediaProvenance
    bona_fide_source: MediaProvenance

    @property
    def label(self) -> str:
        return f"{self.morph_source.short}-{self.bona_fide_source.short}"

    @classmethod
    def parse(cls, label: str) -> "ScenarioConfig":
        for scenario in ALL_SCENARIOS:
            if scenario.label == label.strip().upper():
                return scenario
        raise InputError(f"unknown scenario {label!r} (expected one of D-D, D-PS, PS-D, PS-PS)")

    def __str__(self) -> str:
        return self.label


_D, _PS = MediaProvenance.DIGITAL, MediaProvenance.PRINT_SCANNED

# Row orders of the vulnerability and detectability tables respectively.
VULNERABILITY_ORDER = (
    ScenarioConfig(_D, _D),
    ScenarioConfig(_D, _PS),
    ScenarioConfig(_PS, _D),
    ScenarioConfig(_PS, _PS),
)
DETECTABILITY_ORDER = (
    ScenarioConfig(_D, _D),
    ScenarioConfig(_PS, _D),
    ScenarioConfig(_D, _PS),
    ScenarioConfig(_PS, _PS),
)
ALL_SCENARIOS = VULNERABILITY_ORDER


class Label(enum.Enum):
    BONA_FIDE = "bonafide"
    MORPH = "morph"


@dataclass(frozen=True)
class SimilarityRecord:
    morph_id: str
    subject_index: int
    sample_index: int
    score: float


@dataclass(frozen=True)
class MorphScoreSet:
    """Similarity scores of probe samples against morphs.

    Records are kept sorted by ``(morph_id, subject_index, sample_index)``;
    the flat arrays and group offsets below are derived from that order and
    feed the MMPMR kernels directly.
    """

    records: tuple

    morph_ids: tuple = field(init=False, repr=False, compare=False)
    scores: np.ndarray = field(init=False, repr=False, compare=False)
    subject_starts: np.ndarray = field(init=False, repr=False, compare=False)
    morph_starts: np.ndarray = field(init=False, repr=False, compare=False)
    subject_counts: dict = field(init=False, repr=False, compare=False)
    sample_counts: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: (r.morph_id, r.subject_index, r.sample_index)))
        if not records:
            raise InputError("no records")
        keys = Counter((r.morph_id, r.subject_index, r.sample_index) for r in records)
        dup = next((k for k, c in keys.items() if c > 1), None)
        if dup is not None:
            raise InputError(f"duplicate (morph_id, subject_index, sample_index) triple {dup}")
        for r in records:
            if not math.isfinite(r.score):
                raise InputError(f"non-finite score for {r.morph_id!r}")
            if r.subject_index < 1 or r.sample_index < 1:
                raise InputError(f"indices are 1-based, got subject {r.subject_index} sample {r.sample_index}")

        subjects: dict = {}
        samples: dict = {}
        for r in records:
            subjects.setdefault(r.morph_id, set()).add(r.subject_index)
            samples.setdefault((r.morph_id, r.subject_index), set()).add(r.sample_index)
        for m, subj in subjects.items():
            if subj != set(range(1, len(subj) + 1)):
                raise InputError(f"morph {m!r}: subject indices must be 1..N_m, got {sorted(subj)}")
        for (m, n), samp in samples.items():
            if samp != set(range(1, len(samp) + 1)):
                raise InputError(f"morph {m!r} subject {n}: sample indices must be 1..I, got {sorted(samp)}")

        set_ = object.__setattr__
        set_(self, "records", records)
        set_(self, "morph_ids", tuple(subjects))
        set_(self, "subject_counts", {m: len(s) for m, s in subjects.items()})
        set_(self, "sample_counts", {k: len(s) for k, s in samples.items()})
        scores = np.array([r.score for r in records], dtype=np.float64)
        scores.flags.writeable = False
        set_(self, "scores", scores)

        subj_starts = []
        morph_starts = []
        prev_m = prev_key = None
        for pos, r in enumerate(records):
            key = (r.morph_id, r.subject_index)
            if key != prev_key:
                if r.morph_id != prev_m:
                    morph_starts.append(len(subj_starts))
                    prev_m = r.morph_id
                subj_starts.append(pos)
                prev_key = key
        set_(self, "subject_starts", np.array(subj_starts, dtype=np.int64))
        set_(self, "morph_starts", np.array(morph_starts, dtype=np.int64))

    @classmethod
    def from_records(cls, records: Iterable[SimilarityRecord]) -> "MorphScoreSet":
        return cls(tuple(records))

    @property
    def M(self) -> int:
        return len(self.morph_ids)

    def N(self, morph_id: str) -> int:
        return self.subject_counts[morph_id]

    def I(self, morph_id: str, subject_index: int) -> int:  # noqa: E743
        return self.sample_counts[(morph_id, subject_index)]

    @property
    def single_sample(self) -> bool:
        return all(c == 1 for c in self.sample_counts.values())


@dataclass(frozen=True)
class ImposterScoreSet:
    scores: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float64).ravel().copy()
        if not np.all(np.isfinite(arr)):
            raise InputError("non-finite impostor score")
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)

    def __len__(self):
        return self.scores.size


@dataclass(frozen=True)
class ClassifierRecord:
    image_id: str
    label: Label
    detection_score: float
    provenance: MediaProvenance = MediaProvenance.DIGITAL
    morph_algorithm: Optional[str] = None

    def __post_init__(self):
        if not math.isfinite(self.detection_score):
            raise InputError(f"non-finite score for image {self.image_id!r}")


def check_unique_ids(records: Sequence[ClassifierRecord]) -> None:
    seen = set()
    for r in records:
        if r.image_id in seen:
            raise InputError(f"duplicate image_id {r.image_id!r}")
        seen.add(r.image_id)


def split_by_label(records: Sequence[ClassifierRecord]):
    """Return ``(bona_fide_scores, morph_scores)`` as float arrays.

    Raises :class:`InputError` unless both labels are present.
    """
    bf = np.array([r.detection_score for r in records if r.label is Label.BONA_FIDE], dtype=np.float64)
    mo = np.array([r.detection_score for r in records if r.label is Label.MORPH], dtype=np.float64)
    if bf.size == 0 or mo.size == 0:
        raise InputError("both bona fide and morph records are required")
    return bf, mo


@dataclass(frozen=True)
class LandmarkSet:
    points: np.ndarray  # (68, 2) float64, x then y
    image_width: int
    image_height: int

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InputError("landmarks must be (x, y) pairs")
        if pts.shape[0] != N_LANDMARKS:
            raise InputError(f"expected {N_LANDMARKS} points, got {pts.shape[0]}")
        if self.image_width <= 0 or self.image_height <= 0:
            raise InputError("image dimensions must be positive")
        if not np.all(np.isfinite(pts)):
            raise InputError("non-finite landmark coordinate")
        bad = (pts[:, 0] < 0) | (pts[:, 0] >= self.image_width) | (pts[:, 1] < 0) | (pts[:, 1] >= self.image_height)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise InputError(
                f"landmark {k} at ({pts[k, 0]:g}, {pts[k, 1]:g}) out of bounds "
                f"for {self.image_width}x{self.image_height}"
            )
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def size(self):
        return self.image_width, self.image_height


@dataclass(frozen=True)
class ImageBuffer:
    """8-bit RGB raster, shape ``(height, width, 3)``."""

    pixels: np.ndarray
    ppi: Optional[int] = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise InputError(f"expected an RGB image of shape (H, W, 3), got {px.shape}")
        if px.dtype != np.uint8:
            raise InputError(f"expected 8-bit pixels, got {px.dtype}")
        if self.ppi is not None and self.ppi <= 0:
            raise InputError("ppi must be positive")
        px = np.ascontiguousarray(px).copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def as_float(self) -> np.ndarray:
        """Pixels as float64 in [0, 1]."""
        return self.pixels.astype(np.float64) / 255.0

    @classmethod
    def from_float(cls, values: np.ndarray, ppi: Optional[int] = None) -> "ImageBuffer":
        return cls(quantize(values), ppi=ppi)


def quantize(values: np.ndarray) -> np.ndarray:
    """Map float [0, 1] values to uint8 with a single round-half-even."""
    return np.clip(np.rint(np.asarray(values, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
