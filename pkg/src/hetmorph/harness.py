"""Vulnerability and detectability studies driven by a JSON manifest.

Manifest layout (paths are relative to the manifest file)::

    {
      "fmr": 0.001,
      "bpcer_targets": [0.001, 0.01, 0.05],
      "datasets": ["FRLL"], "morph_algorithms": ["OpenCV"], "fr_systems": ["ArcFace"],
      "scenarios": ["D-D", "D-PS", "PS-D", "PS-PS"],
      "training_compositions": ["digital", "digital+print-scan", "print-scan"],
      "vulnerability": [
        {"dataset": "FRLL", "algorithm": "OpenCV", "fr_system": "ArcFace",
         "scenario": "D-PS", "scores": "sim.csv", "impostors": "imp.csv"}
      ],
      "detectability": [
        {"training": "digital", "algorithm": "OpenCV", "scenario": "PS-D", "scores": "cls.csv"}
      ]
    }

``scenarios``, ``training_compositions``, ``fmr`` and ``bpcer_targets`` are
optional. Grid cells without a binding are reported as absent.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .core import (
    ALL_SCENARIOS,
    DETECTABILITY_ORDER,
    VULNERABILITY_ORDER,
    ClassifierRecord,
    InputError,
    Label,
    ScenarioConfig,
)
from .io import load_classifier_scores, load_impostor_scores, load_similarity_scores
from .metrics import (
    DEFAULT_BPCER_TARGETS,
    DEFAULT_FMR,
    ThresholdCalibration,
    calibrate_threshold,
    macer_at_bpcer,
    prodavg_mmpmr,
)

log = logging.getLogger(__name__)


class TrainingComposition(enum.Enum):
    DIGITAL = "digital"
    DIGITAL_PLUS_PRINT_SCAN = "digital+print-scan"
    PRINT_SCAN = "print-scan"

    @classmethod
    def parse(cls, text: str) -> "TrainingComposition":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise InputError(
                f"unknown training composition {text!r} (expected digital, print-scan or digital+print-scan)"
            ) from None

    @property
    def title(self) -> str:
        return {"digital": "Digital", "digital+print-scan": "Digital + Print-Scan", "print-scan": "Print-Scan"}[
            self.value
        ]


# column-group order of the detectability tables
COMPOSITION_ORDER = (
    TrainingComposition.DIGITAL,
    TrainingComposition.DIGITAL_PLUS_PRINT_SCAN,
    TrainingComposition.PRINT_SCAN,
)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class VulnerabilityBinding:
    dataset: str
    algorithm: str
    fr_system: str
    scenario: ScenarioConfig
    scores: str
    impostors: str


@dataclass(frozen=True)
class DetectabilityBinding:
    training: TrainingComposition
    algorithm: str
    scenario: ScenarioConfig
    scores: str


@dataclass
class EvaluationManifest:
    datasets: List[str]
    morph_algorithms: List[str]
    fr_systems: List[str]
    scenarios: List[ScenarioConfig] = field(default_factory=lambda: list(ALL_SCENARIOS))
    training_compositions: List[TrainingComposition] = field(default_factory=lambda: list(COMPOSITION_ORDER))
    vulnerability: List[VulnerabilityBinding] = field(default_factory=list)
    detectability: List[DetectabilityBinding] = field(default_factory=list)
    fmr: float = DEFAULT_FMR
    bpcer_targets: Tuple[float, ...] = DEFAULT_BPCER_TARGETS
    root: Path = field(default_factory=Path)

    def resolve(self, rel: str) -> Path:
        return (self.root / rel) if not Path(rel).is_absolute() else Path(rel)

    def validate(self) -> None:
        def check_names(kind, values):
            if len(set(values)) != len(values):
                raise InputError(f"duplicate entries in {kind}")

        check_names("datasets", self.datasets)
        check_names("morph_algorithms", self.morph_algorithms)
        check_names("fr_systems", self.fr_systems)
        check_names("scenarios", [s.label for s in self.scenarios])
        check_names("training_compositions", [c.value for c in self.training_compositions])
        if not 0 < self.fmr < 1:
            raise InputError(f"fmr must lie in (0, 1), got {self.fmr}")
        seen = set()
        for b in self.vulnerability:
            key = (b.algorithm, b.dataset, b.fr_system, b.scenario.label)
            if key in seen:
                raise InputError(f"duplicate vulnerability binding {key}")
            seen.add(key)
            if b.dataset not in self.datasets or b.algorithm not in self.morph_algorithms \
                    or b.fr_system not in self.fr_systems or b.scenario not in self.scenarios:
                raise InputError(f"vulnerability binding {key} refers to an undeclared name")
            for rel in (b.scores, b.impostors):
                if not self.resolve(rel).is_file():
                    raise InputError(f"bound file does not exist: {rel}")
        seen = set()
        for b in self.detectability:
            key = (b.training.value, b.algorithm, b.scenario.label)
            if key in seen:
                raise InputError(f"duplicate detectability binding {key}")
            seen.add(key)
            if b.algorithm not in self.morph_algorithms or b.scenario not in self.scenarios \
                    or b.training not in self.training_compositions:
                raise InputError(f"detectability binding {key} refers to an undeclared name")
            if not self.resolve(b.scores).is_file():
                raise InputError(f"bound file does not exist: {b.scores}")


def _require(doc, key, kind=list):
    if key not in doc:
        raise InputError(f"manifest is missing {key!r}")
    if not isinstance(doc[key], kind):
        raise InputError(f"manifest field {key!r} must be a {kind.__name__}")
    return doc[key]


def load_manifest(path) -> EvaluationManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError("manifest not found", path=str(path)) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg}", exc.lineno, str(path)) from None
    if not isinstance(doc, dict):
        raise InputError("manifest must be a JSON object", path=str(path))
    try:
        manifest = EvaluationManifest(
            datasets=list(_require(doc, "datasets")),
            morph_algorithms=list(_require(doc, "morph_algorithms")),
            fr_systems=list(_require(doc, "fr_systems")),
            scenarios=[ScenarioConfig.parse(s) for s in doc.get("scenarios", [s.label for s in ALL_SCENARIOS])],
            training_compositions=[
                TrainingComposition.parse(c) for c in doc.get("training_compositions", [c.value for c in COMPOSITION_ORDER])
            ],
            vulnerability=[
                VulnerabilityBinding(
                    b["dataset"], b["algorithm"], b["fr_system"], ScenarioConfig.parse(b["scenario"]),
                    b["scores"], b["impostors"],
                )
                for b in doc.get("vulnerability", [])
            ],
            detectability=[
                DetectabilityBinding(
                    TrainingComposition.parse(b["training"]), b["algorithm"], ScenarioConfig.parse(b["scenario"]),
                    b["scores"],
                )
                for b in doc.get("detectability", [])
            ],
            fmr=float(doc.get("fmr", DEFAULT_FMR)),
            bpcer_targets=tuple(float(t) for t in doc.get("bpcer_targets", DEFAULT_BPCER_TARGETS)),
            root=path.parent,
        )
    except KeyError as exc:
        raise InputError(f"binding is missing field {exc.args[0]!r}", path=str(path)) from None
    except InputError as exc:
        raise InputError(exc.message, path=str(path)) from None
    manifest.validate()
    return manifest


# -- report ------------------------------------------------------------------


@dataclass(frozen=True)
class VulnerabilityCell:
    algorithm: str
    dataset: str
    fr_system: str
    scenario: str
    value: float  # ProdAvg-MMPMR as a fraction
    calibration: ThresholdCalibration
    scores: str
    scores_sha256: str
    impostors: str
    impostors_sha256: str

    @property
    def percent(self) -> float:
        return 100.0 * self.value


@dataclass(frozen=True)
class DetectabilityCell:
    training: str
    algorithm: str
    scenario: str
    eer: float
    macer: Dict[float, float]
    thresholds: Dict[float, float]
    scores: str
    scores_sha256: str


@dataclass(frozen=True)
class AbsentCell:
    section: str
    key: Tuple[str, ...]
    reason: str


@dataclass
class MetricReport:
    datasets: List[str] = field(default_factory=list)
    morph_algorithms: List[str] = field(default_factory=list)
    fr_systems: List[str] = field(default_factory=list)
    training_compositions: List[str] = field(default_factory=list)
    fmr: float = DEFAULT_FMR
    bpcer_targets: Tuple[float, ...] = DEFAULT_BPCER_TARGETS
    vulnerability: Dict[Tuple[str, str, str, str], VulnerabilityCell] = field(default_factory=dict)
    detectability: Dict[Tuple[str, str, str], DetectabilityCell] = field(default_factory=dict)
    absent: List[AbsentCell] = field(default_factory=list)
    version: str = __version__

    @property
    def complete(self) -> bool:
        return not self.absent


def _vuln_cell(manifest: EvaluationManifest, b: VulnerabilityBinding) -> VulnerabilityCell:
    scores_path = manifest.resolve(b.scores)
    imp_path = manifest.resolve(b.impostors)
    scores = load_similarity_scores(scores_path)
    cal = calibrate_threshold(load_impostor_scores(imp_path), manifest.fmr)
    return VulnerabilityCell(
        b.algorithm, b.dataset, b.fr_system, b.scenario.label,
        prodavg_mmpmr(scores, cal.delta), cal,
        b.scores, sha256_file(scores_path), b.impostors, sha256_file(imp_path),
    )


def _det_cell(manifest: EvaluationManifest, b: DetectabilityBinding) -> DetectabilityCell:
    path = manifest.resolve(b.scores)
    records = load_classifier_scores(path)
    op = macer_at_bpcer(records, manifest.bpcer_targets)
    return DetectabilityCell(
        b.training.value, b.algorithm, b.scenario.label, op.eer, op.macer_at_bpcer, op.thresholds,
        b.scores, sha256_file(path),
    )


def _map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _guard(fn):
    def wrapped(item):
        try:
            return fn(item)
        except InputError as exc:
            return exc

    return wrapped


def _empty_report(manifest: EvaluationManifest) -> MetricReport:
    return MetricReport(
        datasets=list(manifest.datasets),
        morph_algorithms=list(manifest.morph_algorithms),
        fr_systems=list(manifest.fr_systems),
        training_compositions=[c.value for c in manifest.training_compositions],
        fmr=manifest.fmr,
        bpcer_targets=tuple(manifest.bpcer_targets),
    )


def run_vulnerability_study(manifest: EvaluationManifest, jobs: int = 1, report: Optional[MetricReport] = None):
    """Calibrate delta at the manifest FMR per cell, then evaluate ProdAvg-MMPMR."""
    report = report or _empty_report(manifest)
    bound = {(b.algorithm, b.dataset, b.fr_system, b.scenario.label): b for b in manifest.vulnerability}
    keys = sorted(bound)
    results = _map(_guard(lambda k: _vuln_cell(manifest, bound[k])), keys, jobs)
    for key, res in zip(keys, results):
        if isinstance(res, InputError):
            report.absent.append(AbsentCell("vulnerability", key, str(res)))
        else:
            report.vulnerability[key] = res
    for alg in manifest.morph_algorithms:
        for ds in manifest.datasets:
            for fr in manifest.fr_systems:
                for sc in manifest.scenarios:
                    key = (alg, ds, fr, sc.label)
                    if key not in bound:
                        report.absent.append(AbsentCell("vulnerability", key, "no binding"))
    return report


def run_detectability_study(manifest: EvaluationManifest, jobs: int = 1, report: Optional[MetricReport] = None):
    """EER and MACER at each BPCER target per (training, algorithm, scenario)."""
    report = report or _empty_report(manifest)
    bound = {(b.training.value, b.algorithm, b.scenario.label): b for b in manifest.detectability}
    keys = sorted(bound)
    results = _map(_guard(lambda k: _det_cell(manifest, bound[k])), keys, jobs)
    for key, res in zip(keys, results):
        if isinstance(res, InputError):
            report.absent.append(AbsentCell("detectability", key, str(res)))
        else:
            report.detectability[key] = res
    for comp in manifest.training_compositions:
        for alg in manifest.morph_algorithms:
            for sc in manifest.scenarios:
                key = (comp.value, alg, sc.label)
                if key not in bound:
                    report.absent.append(AbsentCell("detectability", key, "no binding"))
    return report


def run_manifest(manifest: EvaluationManifest, jobs: int = 1) -> MetricReport:
    report = run_vulnerability_study(manifest, jobs)
    run_detectability_study(manifest, jobs, report)
    report.absent.sort(key=lambda a: (a.section, a.key))
    return report


# -- cross-validation --------------------------------------------------------


def stratified_kfold(records, k: int = 5, seed: int = 0) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Stratified k-fold partitions as ``(train_indices, validation_indices)``.

    ``records`` may be :class:`ClassifierRecord` objects or plain labels. Each
    class is shuffled with a seeded generator and dealt round-robin over the
    folds, continuing where the previous class stopped so fold sizes stay
    balanced overall as well as per class.
    """
    if k < 2:
        raise InputError(f"k must be >= 2, got {k}")
    labels = [r.label if isinstance(r, ClassifierRecord) else r for r in records]
    labels = [lab.value if isinstance(lab, Label) else lab for lab in labels]
    classes = sorted(set(labels), key=str)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=np.int64)
    start = 0
    for cls in classes:
        idx = np.array([i for i, lab in enumerate(labels) if lab == cls], dtype=np.int64)
        if idx.size < k:
            raise InputError(f"class {cls!r} has {idx.size} member(s), fewer than k={k}")
        idx = rng.permutation(idx)
        fold_of[idx] = (start + np.arange(idx.size)) % k
        start = (start + idx.size) % k
    all_idx = np.arange(len(labels))
    return [(all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(k)]


__all__ = [
    "AbsentCell",
    "COMPOSITION_ORDER",
    "DETECTABILITY_ORDER",
    "DetectabilityBinding",
    "DetectabilityCell",
    "EvaluationManifest",
    "MetricReport",
    "TrainingComposition",
    "VULNERABILITY_ORDER",
    "VulnerabilityBinding",
    "VulnerabilityCell",
    "load_manifest",
    "run_detectability_study",
    "run_manifest",
    "run_vulnerability_study",
    "sha256_file",
    "stratified_kfold",
]
