"""Vulnerability and detection metrics.

Conventions: similarity scores are "higher = more similar" and a comparison
matches when ``score > delta`` (ties do not match). Detection scores are
"higher = more morph-like"; at threshold ``t`` an image is flagged as a morph
when ``score >= t``. All rates are fractions in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from . import _accel
from .core import ClassifierRecord, ImposterScoreSet, InputError, MorphScoreSet, split_by_label

DEFAULT_BPCER_TARGETS = (0.001, 0.01, 0.05)
DEFAULT_FMR = 0.001


@dataclass(frozen=True)
class ThresholdCalibration:
    delta: float
    target_fmr: float
    achieved_fmr: float
    n_impostors: int = 0


def calibrate_threshold(impostors, target_fmr: float = DEFAULT_FMR) -> ThresholdCalibration:
    """Smallest observed impostor score ``delta`` with FMR(delta) <= target.

    FMR(delta) is the fraction of impostor scores strictly above ``delta``.
    Because the maximum score always yields FMR 0, the result is always one
    of the observed scores.
    """
    if isinstance(impostors, ImposterScoreSet):
        scores = impostors.scores
    else:
        scores = ImposterScoreSet(np.asarray(impostors, dtype=np.float64)).scores
    if scores.size == 0:
        raise InputError("empty impostor set")
    if not 0.0 < target_fmr < 1.0:
        raise InputError(f"target FMR must lie in (0, 1), got {target_fmr}")
    s = np.sort(scores)
    n = s.size
    above = n - np.searchsorted(s, s, side="right")
    ok = above / n <= target_fmr
    j = int(np.argmax(ok))
    return ThresholdCalibration(float(s[j]), float(target_fmr), float(above[j] / n), n)


def _check_delta(delta):
    if math.isnan(delta):
        raise InputError("delta must not be NaN")


@_accel.njit
def _prodavg_numba(scores, subject_starts, morph_starts, delta):
    n_subj = subject_starts.size
    n_morph = morph_starts.size
    total = 0.0
    for m in range(n_morph):
        s0 = morph_starts[m]
        s1 = morph_starts[m + 1] if m + 1 < n_morph else n_subj
        prod = 1.0
        for s in range(s0, s1):
            r0 = subject_starts[s]
            r1 = subject_starts[s + 1] if s + 1 < n_subj else scores.size
            hits = 0
            for r in range(r0, r1):
                if scores[r] > delta:
                    hits += 1
            prod *= hits / (r1 - r0)
        total += prod
    return total / n_morph


def _prodavg_numpy(scores, subject_starts, morph_starts, delta):
    hits = np.add.reduceat((scores > delta).astype(np.int64), subject_starts)
    sizes = np.diff(np.append(subject_starts, scores.size))
    per_morph = np.multiply.reduceat(hits / sizes, morph_starts)
    total = 0.0
    for v in per_morph:
        total += v
    return total / morph_starts.size


def prodavg_mmpmr(scores: MorphScoreSet, delta: float) -> float:
    """ProdAvg-MMPMR: per morph, the product over subjects of each subject's
    match fraction, averaged over morphs."""
    _check_delta(delta)
    kernel = _prodavg_numba if _accel.USE_NUMBA else _prodavg_numpy
    return float(kernel(scores.scores, scores.subject_starts, scores.morph_starts, float(delta)))


def mmpmr(scores: MorphScoreSet, delta: float) -> float:
    """Fraction of morphs whose minimum subject similarity exceeds ``delta``.

    Only defined for one sample per subject; use :func:`prodavg_mmpmr` otherwise.
    """
    _check_delta(delta)
    if not scores.single_sample:
        raise InputError("mmpmr needs exactly one sample per subject; use prodavg_mmpmr for multiple samples")
    worst = np.minimum.reduceat(scores.scores, scores.morph_starts)
    total = 0.0
    for v in worst > delta:
        total += float(v)
    return total / scores.M


@dataclass(frozen=True)
class RocCurve:
    """Operating points ordered by increasing threshold.

    ``far`` is the bona fide flag rate (BPCER), ``frr`` the morph miss rate
    (MACER). The last point has threshold ``+inf``.
    """

    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray
    n_bona_fide: int
    n_morph: int

    def __len__(self):
        return self.thresholds.size


def _roc_from_scores(bf: np.ndarray, mo: np.ndarray) -> RocCurve:
    thresholds = np.unique(np.concatenate([bf, mo]))
    thresholds = np.append(thresholds, np.inf)
    bf_sorted = np.sort(bf)
    mo_sorted = np.sort(mo)
    far = (bf.size - np.searchsorted(bf_sorted, thresholds, side="left")) / bf.size
    frr = np.searchsorted(mo_sorted, thresholds, side="left") / mo.size
    return RocCurve(thresholds, far, frr, bf.size, mo.size)


def compute_roc(records: Sequence[ClassifierRecord]) -> RocCurve:
    bf, mo = split_by_label(records)
    return _roc_from_scores(bf, mo)


def _eer_from_roc(roc: RocCurve) -> float:
    d = roc.far - roc.frr
    k = int(np.argmax(d <= 0))
    if d[k] == 0:
        return float(roc.far[k])
    # d[0] == 1 - frr[0] > 0 always, so k >= 1 here
    lam = d[k - 1] / (d[k - 1] - d[k])
    return float(roc.far[k - 1] + lam * (roc.far[k] - roc.far[k - 1]))


def equal_error_rate(records: Sequence[ClassifierRecord]) -> float:
    """EER with linear interpolation between adjacent ROC points."""
    return _eer_from_roc(compute_roc(records))


@dataclass(frozen=True)
class DetectorOperatingReport:
    eer: float
    macer_at_bpcer: Dict[float, float] = field(default_factory=dict)
    thresholds: Dict[float, float] = field(default_factory=dict)
    achieved_bpcer: Dict[float, float] = field(default_factory=dict)


def _select(roc: RocCurve, target: float, rule: str) -> int:
    if rule == "floor":
        # largest BPCER <= target: smallest threshold whose FAR fits
        return int(np.argmax(roc.far <= target))
    if rule == "ceil":
        # smallest BPCER >= target; among equal BPCER the lowest threshold
        # (lowest MACER). far[0] == 1 so the set is never empty.
        best = roc.far[roc.far >= target].min()
        return int(np.argmax(roc.far == best))
    raise ValueError(f"unknown threshold rule {rule!r}")


def macer_at_bpcer(
    records: Sequence[ClassifierRecord],
    bpcer_targets: Sequence[float] = DEFAULT_BPCER_TARGETS,
    rule: str = "floor",
) -> DetectorOperatingReport:
    """MACER at fixed BPCER operating points, plus the EER.

    ``rule="floor"`` (default) picks the threshold with the largest BPCER not
    above the target; ``rule="ceil"`` the smallest BPCER not below it.
    """
    for t in bpcer_targets:
        if not 0.0 < t < 1.0:
            raise InputError(f"BPCER target must lie in (0, 1), got {t}")
    roc = compute_roc(records)
    macer, thr, achieved = {}, {}, {}
    for t in bpcer_targets:
        k = _select(roc, t, rule)
        macer[t] = float(roc.frr[k])
        thr[t] = float(roc.thresholds[k])
        achieved[t] = float(roc.far[k])
    return DetectorOperatingReport(_eer_from_roc(roc), macer, thr, achieved)


def ema_decay(batch_size: int) -> float:
    """EMA decay scaled with batch size: one half per thousand samples."""
    if isinstance(batch_size, bool) or int(batch_size) != batch_size or batch_size < 1:
        raise InputError(f"batch size must be a positive integer, got {batch_size!r}")
    return 0.5 ** (int(batch_size) / 1000)
