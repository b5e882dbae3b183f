"""Compare the numba kernels with their numpy fallbacks.

    python benchmarks/bench_backends.py [--repeat 5] [--size 600]

Both paths run in the same process by toggling ``hetmorph._accel.USE_NUMBA``.
The first numba call of each kernel is timed separately as compile time.
"""

import argparse
import time

import numpy as np
from scipy import ndimage

from hetmorph import _accel
from hetmorph.core import ImageBuffer, LandmarkSet, MorphScoreSet, SimilarityRecord
from hetmorph.metrics import prodavg_mmpmr
from hetmorph.morph import morph


def _face(rng, size):
    field = ndimage.gaussian_filter(rng.normal(0, 1, (size, size, 3)), sigma=(8, 8, 0))
    img = 128 + field / np.abs(field).max() * 60
    return ImageBuffer(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def _landmarks(rng, size):
    m = size * 0.1
    return LandmarkSet(rng.uniform(m, size - m, (68, 2)), size, size)


def _scores(rng, n_morphs):
    recs = []
    for m in range(n_morphs):
        for n in (1, 2):
            for i in range(1, int(rng.integers(1, 6)) + 1):
                recs.append(SimilarityRecord(f"m{m}", n, i, float(rng.uniform())))
    return MorphScoreSet.from_records(recs)


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=600, help="morph canvas edge in pixels")
    ap.add_argument("--morphs", type=int, default=20000, help="morphs in the ProdAvg score set")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    a, b = _face(rng, args.size), _face(rng, args.size)
    la, lb = _landmarks(rng, args.size), _landmarks(rng, args.size)
    scores = _scores(rng, args.morphs)

    cases = {
        f"morph {args.size}x{args.size}": lambda: morph(a, la, b, lb),
        f"prodavg ({len(scores.records)} scores)": lambda: prodavg_mmpmr(scores, 0.5),
    }
    print(f"{'kernel':32s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s} {'compile':>9s}")
    for name, fn in cases.items():
        _accel.USE_NUMBA = False
        t_np = _best(fn, args.repeat)
        if not _accel.HAVE_NUMBA:
            print(f"{name:32s} {t_np:10.4f} {'n/a':>10s}")
            continue
        _accel.USE_NUMBA = True
        t0 = time.perf_counter()
        fn()
        first = time.perf_counter() - t0
        t_nb = _best(fn, args.repeat)
        print(f"{name:32s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:7.1f}x {max(first - t_nb, 0):8.2f}s")


if __name__ == "__main__":
    main()
