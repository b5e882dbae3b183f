"""The numba kernels and their numpy fallbacks must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest

from hetmorph import _accel
from hetmorph.metrics import prodavg_mmpmr
from hetmorph.morph import morph

from helpers import random_landmarks, random_score_rows, score_set, synthetic_face

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


@pytest.fixture
def backend(monkeypatch):
    def use(name):
        monkeypatch.setattr(_accel, "USE_NUMBA", name == "numba")

    return use


@needs_numba
def test_prodavg_backends_agree(backend):
    rng = np.random.default_rng(17)
    for _ in range(100):
        s = score_set(random_score_rows(rng))
        delta = float(rng.uniform(0, 1))
        backend("numba")
        a = prodavg_mmpmr(s, delta)
        backend("numpy")
        b = prodavg_mmpmr(s, delta)
        assert a == b


@needs_numba
@pytest.mark.parametrize("alpha, boundary", [(0.5, True), (0.3, True), (0.5, False)])
def test_morph_backends_agree(backend, alpha, boundary):
    from hetmorph.morph import MorphParams

    rng = np.random.default_rng(23)
    a, b = synthetic_face(1), synthetic_face(2)
    la, lb = random_landmarks(rng), random_landmarks(rng)
    params = MorphParams(alpha, boundary)
    backend("numba")
    out_n, _, q_n = morph(a, la, b, lb, params, jobs=3)
    backend("numpy")
    out_p, _, q_p = morph(a, la, b, lb, params, jobs=3)
    np.testing.assert_array_equal(out_n.pixels, out_p.pixels)
    assert q_n == q_p


def _backend_of(env_value):
    env = dict(os.environ, **{_accel.BACKEND_ENV: env_value})
    proc = subprocess.run(
        [sys.executable, "-c", "from hetmorph import _accel; print(_accel.BACKEND)"],
        env=env, capture_output=True, text=True,
    )
    return proc.returncode, proc.stdout.strip()


def test_env_flag_selects_backend():
    assert _backend_of("numpy") == (0, "numpy")
    expected = "numba" if _accel.HAVE_NUMBA else "numpy"
    assert _backend_of("numba") == (0, expected)
    code, _ = _backend_of("fortran")
    assert code != 0
