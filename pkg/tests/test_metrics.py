import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetmorph.core import ClassifierRecord, ImposterScoreSet, InputError, Label
from hetmorph.metrics import (
    DEFAULT_BPCER_TARGETS,
    calibrate_threshold,
    compute_roc,
    ema_decay,
    equal_error_rate,
    macer_at_bpcer,
    mmpmr,
    prodavg_mmpmr,
)

from helpers import classifier_records, random_score_rows, score_set
from oracles import brute_calibrate, brute_fmr, brute_macer, brute_rates, dense_sweep_eer, naive_mmpmr, naive_prodavg


# -- calibration --------------------------------------------------------------


def test_calibrate_tenths():
    imp = [k / 10 for k in range(1, 11)]
    cal = calibrate_threshold(imp, 0.1)
    assert cal.delta == 0.9
    assert cal.achieved_fmr == 0.1
    assert cal.n_impostors == 10


def test_calibrate_two_scores():
    cal = calibrate_threshold([0.0, 1.0], 0.5)
    assert cal.delta == 0.0 and cal.achieved_fmr == 0.5


def test_calibrate_all_equal():
    cal = calibrate_threshold([0.3] * 7, 0.01)
    assert cal.delta == 0.3 and cal.achieved_fmr == 0.0


def test_calibrate_errors():
    with pytest.raises(InputError, match="empty"):
        calibrate_threshold(ImposterScoreSet(np.array([])), 0.1)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(InputError):
            calibrate_threshold([0.1, 0.2], bad)


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.integers(0, 40), min_size=1, max_size=200),
    st.sampled_from([0.001, 0.01, 0.05, 0.1, 0.3]),
)
def test_calibrate_matches_brute_force(ints, target):
    scores = [v / 8 for v in ints]  # coarse grid forces ties
    cal = calibrate_threshold(scores, target)
    assert cal.delta == brute_calibrate(scores, target)
    assert cal.achieved_fmr == brute_fmr(scores, cal.delta) <= target
    smaller = [s for s in set(scores) if s < cal.delta]
    assert all(brute_fmr(scores, s) > target for s in smaller)


# -- mmpmr / prodavg ----------------------------------------------------------


def test_mmpmr_examples():
    assert mmpmr(score_set([("m", 1, 1, 0.9), ("m", 2, 1, 0.8)]), 0.7) == 1.0
    assert mmpmr(score_set([("m", 1, 1, 0.9), ("m", 2, 1, 0.6)]), 0.7) == 0.0


def test_mmpmr_tie_is_not_a_match():
    assert mmpmr(score_set([("m", 1, 1, 0.7), ("m", 2, 1, 0.9)]), 0.7) == 0.0


def test_mmpmr_rejects_multi_sample():
    s = score_set([("m", 1, 1, 0.9), ("m", 1, 2, 0.5), ("m", 2, 1, 0.8)])
    with pytest.raises(InputError, match="prodavg"):
        mmpmr(s, 0.7)


def test_prodavg_worked_example():
    s = score_set([("m", 1, 1, 0.9), ("m", 1, 2, 0.5), ("m", 2, 1, 0.8)])
    assert prodavg_mmpmr(s, 0.7) == 0.5
    assert naive_prodavg([(r.morph_id, r.subject_index, r.sample_index, r.score) for r in s.records], 0.7) == 0.5


def test_prodavg_all_below():
    rng = np.random.default_rng(1)
    rows = random_score_rows(rng)
    assert prodavg_mmpmr(score_set(rows), 1.0) == 0.0


def test_prodavg_extreme_thresholds():
    rows = random_score_rows(np.random.default_rng(2))
    s = score_set(rows)
    assert prodavg_mmpmr(s, -math.inf) == 1.0
    assert prodavg_mmpmr(s, math.inf) == 0.0
    with pytest.raises(InputError):
        prodavg_mmpmr(s, math.nan)


def test_mmpmr_50_random_morphs():
    rng = np.random.default_rng(50)
    for _ in range(20):
        rows = random_score_rows(rng, max_m=50, single=True)
        delta = float(rng.uniform(0, 1))
        assert abs(mmpmr(score_set(rows), delta) - naive_mmpmr(rows, delta)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_prodavg_matches_naive(seed):
    rng = np.random.default_rng(seed)
    rows = random_score_rows(rng)
    delta = float(np.round(rng.uniform(-0.05, 1.05), 3))  # rounded so ties at delta happen
    assert abs(prodavg_mmpmr(score_set(rows), delta) - naive_prodavg(rows, delta)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_prodavg_collapses_to_mmpmr(seed):
    rng = np.random.default_rng(seed)
    s = score_set(random_score_rows(rng, single=True))
    delta = float(rng.uniform(0, 1))
    assert prodavg_mmpmr(s, delta) == mmpmr(s, delta)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_prodavg_monotone_in_delta(seed):
    rng = np.random.default_rng(seed)
    s = score_set(random_score_rows(rng))
    vals = [prodavg_mmpmr(s, d) for d in np.linspace(-0.1, 1.1, 40)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


# -- ROC / EER ----------------------------------------------------------------


def test_roc_perfect_separation_has_origin_point():
    roc = compute_roc(classifier_records([0.1], [0.9]))
    assert any(f == 0 and r == 0 for f, r in zip(roc.far, roc.frr))
    assert equal_error_rate(classifier_records([0.1], [0.9])) == 0.0


def test_roc_identical_distributions_on_diagonal():
    scores = [0.1, 0.4, 0.4, 0.7, 0.9]
    roc = compute_roc(classifier_records(scores, scores))
    np.testing.assert_allclose(roc.far + roc.frr, 1.0)


def test_roc_endpoints_and_monotone():
    rng = np.random.default_rng(4)
    roc = compute_roc(classifier_records(rng.normal(0, 1, 50), rng.normal(1, 1, 40)))
    assert (roc.far[0], roc.frr[0]) == (1.0, 0.0)
    assert (roc.far[-1], roc.frr[-1]) == (0.0, 1.0)
    assert np.all(np.diff(roc.far) <= 0) and np.all(np.diff(roc.frr) >= 0)


def test_roc_matches_recount():
    rng = np.random.default_rng(200)
    bf = list(np.round(rng.uniform(0, 1, 110), 2))
    mo = list(np.round(rng.uniform(0.2, 1.2, 90), 2))
    roc = compute_roc(classifier_records(bf, mo))
    for t, far, frr in zip(roc.thresholds, roc.far, roc.frr):
        assert (far, frr) == brute_rates(bf, mo, t)


def test_single_class_rejected():
    recs = [ClassifierRecord("a", Label.MORPH, 0.3), ClassifierRecord("b", Label.MORPH, 0.5)]
    with pytest.raises(InputError):
        compute_roc(recs)
    with pytest.raises(InputError):
        equal_error_rate(recs)
    with pytest.raises(InputError):
        macer_at_bpcer(recs)


def test_eer_chance_level():
    rng = np.random.default_rng(11)
    scores = rng.uniform(0, 1, 10_000)
    labels = rng.integers(0, 2, 10_000).astype(bool)
    eer = equal_error_rate(classifier_records(scores[~labels], scores[labels]))
    assert abs(eer - 0.5) <= 0.02


def test_eer_exact_crossing_and_interpolation():
    # bf {0, 1}, mo {0.5, 2}: FAR-FRR over t = 0, .5, 1, 2, inf is (1, .5, 0, -.5, -1)
    assert equal_error_rate(classifier_records([0.0, 1.0], [0.5, 2.0])) == 0.5
    # bf {0, 2}, mo {1}: FAR (1, .5, .5, 0), FRR (0, 0, 1, 1) over t = 0, 1, 2, inf.
    # d goes .5 -> -.5 between t=1 and t=2, so lambda = 1/2 and EER = .5
    assert equal_error_rate(classifier_records([0.0, 2.0], [1.0])) == 0.5
    # bf {0, 1, 3}, mo {2}: FAR (1, 2/3, 1/3, 1/3, 0), FRR (0, 0, 0, 1, 1); crossing at FAR 1/3
    assert equal_error_rate(classifier_records([0.0, 1.0, 3.0], [2.0])) == pytest.approx(1 / 3)


@pytest.mark.parametrize("seed", range(12))
def test_eer_close_to_dense_sweep(seed):
    rng = np.random.default_rng(seed)
    bf = rng.normal(0, 1, 50)
    mo = rng.normal(1.2, 1, 50)
    eer = equal_error_rate(classifier_records(bf, mo))
    # one interpolation step is at most one record of either class
    assert abs(eer - dense_sweep_eer(bf, mo)) <= 1 / 50 + 1e-9


@pytest.mark.parametrize("transform", [lambda x: 3 * x - 2, np.exp, lambda x: np.arctan(x) + x**3])
def test_eer_invariant_under_monotone_transform(transform):
    rng = np.random.default_rng(5)
    bf = rng.normal(0, 1, 80)
    mo = rng.normal(0.8, 1, 70)
    base = equal_error_rate(classifier_records(bf, mo))
    assert equal_error_rate(classifier_records(transform(bf), transform(mo))) == base


# -- MACER @ BPCER ------------------------------------------------------------


def test_macer_perfect_detector():
    rep = macer_at_bpcer(classifier_records([0.0, 0.1, 0.2], [0.8, 0.9]))
    assert rep.eer == 0.0
    assert all(v == 0.0 for v in rep.macer_at_bpcer.values())
    assert tuple(rep.macer_at_bpcer) == DEFAULT_BPCER_TARGETS


def test_macer_constant_detector():
    rep = macer_at_bpcer(classifier_records([0.5] * 10, [0.5] * 10))
    assert all(v == 1.0 for v in rep.macer_at_bpcer.values())


def test_macer_rejects_bad_targets():
    recs = classifier_records([0.1], [0.9])
    for t in (0.0, 1.0, 1.5):
        with pytest.raises(InputError):
            macer_at_bpcer(recs, [t])


@pytest.mark.parametrize("rule", ["floor", "ceil"])
def test_macer_300_records_matches_enumeration(rule):
    rng = np.random.default_rng(300)
    bf = list(np.round(rng.normal(0, 1, 150), 1))
    mo = list(np.round(rng.normal(1.5, 1, 150), 1))
    targets = [0.001, 0.01, 0.05, 0.1, 0.2]
    rep = macer_at_bpcer(classifier_records(bf, mo), targets, rule)
    for t in targets:
        assert rep.macer_at_bpcer[t] == brute_macer(bf, mo, t, rule)
        assert rep.achieved_bpcer[t] == brute_rates(bf, mo, rep.thresholds[t])[0]
        if rule == "floor":
            assert rep.achieved_bpcer[t] <= t
        else:
            assert rep.achieved_bpcer[t] >= t


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_macer_monotone_in_target(seed):
    rng = np.random.default_rng(seed)
    bf = np.round(rng.normal(0, 1, int(rng.integers(1, 60))), 1)
    mo = np.round(rng.normal(1, 1, int(rng.integers(1, 60))), 1)
    targets = sorted({0.001, 0.01, 0.05, float(rng.uniform(0.001, 0.999))})
    for rule in ("floor", "ceil"):
        vals = [macer_at_bpcer(classifier_records(bf, mo), targets, rule).macer_at_bpcer[t] for t in targets]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


# -- EMA ----------------------------------------------------------------------


def test_ema_values():
    assert abs(ema_decay(128) - 0.9151) <= 0.001
    assert ema_decay(1000) == 0.5
    assert ema_decay(2000) == 0.25
    assert ema_decay(1) == 0.5 ** 0.001


def test_ema_strictly_decreasing():
    vals = [ema_decay(b) for b in range(1, 4097)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("bad", [0, -5, True, 1.5])
def test_ema_rejects(bad):
    with pytest.raises(InputError):
        ema_decay(bad)
