"""Synthetic data generators shared by the test modules."""

import json

import numpy as np
from scipy import ndimage

from hetmorph.core import (
    ClassifierRecord,
    ImageBuffer,
    Label,
    LandmarkSet,
    MorphScoreSet,
    SimilarityRecord,
)


def random_score_rows(rng, max_m=20, max_n=3, max_i=5, single=False):
    rows = []
    for m in range(int(rng.integers(1, max_m + 1))):
        for n in range(1, int(rng.integers(1, max_n + 1)) + 1):
            count = 1 if single else int(rng.integers(1, max_i + 1))
            for i in range(1, count + 1):
                rows.append((f"m{m:03d}", n, i, float(np.round(rng.uniform(0, 1), 3))))
    return rows


def score_set(rows):
    return MorphScoreSet.from_records(SimilarityRecord(*r) for r in rows)


def classifier_records(bf, mo):
    recs = [ClassifierRecord(f"b{i}", Label.BONA_FIDE, float(s)) for i, s in enumerate(bf)]
    recs += [ClassifierRecord(f"m{i}", Label.MORPH, float(s)) for i, s in enumerate(mo)]
    return recs


def synthetic_face(seed, width=160, height=192):
    """Smooth, face-like RGB test image (low-frequency field plus gradient)."""
    rng = np.random.default_rng(seed)
    base = rng.uniform(40, 215, 3)
    field = ndimage.gaussian_filter(rng.normal(0, 1, (height, width, 3)), sigma=(8, 8, 0))
    field = field / (np.abs(field).max() + 1e-12) * 35
    yy, xx = np.mgrid[0:height, 0:width]
    grad = (xx / width - 0.5)[:, :, None] * rng.uniform(-30, 30, 3)
    img = np.clip(base + field + grad, 0, 255)
    return ImageBuffer(np.rint(img).astype(np.uint8))


def random_landmarks(rng, width=160, height=192, margin=12):
    pts = np.column_stack([rng.uniform(margin, width - margin, 68), rng.uniform(margin, height - margin, 68)])
    return LandmarkSet(pts, width, height)


SCENARIOS = ("D-D", "D-PS", "PS-D", "PS-PS")
COMPOSITIONS = ("digital", "digital+print-scan", "print-scan")


def write_synthetic_study(root, seed=0, perfect=("digital+print-scan", "OpenCV", "D-D")):
    """Write generated score files and a manifest under ``root``.

    Returns ``(manifest_path, vuln, det)`` where ``vuln`` maps
    (algorithm, dataset, fr_system, scenario) to (rows, impostors) and ``det``
    maps (training, algorithm, scenario) to (bona_fide, morph) score lists.
    The ``perfect`` detectability cell gets fully separated classes.
    """
    rng = np.random.default_rng(seed)
    datasets, algorithms, fr_systems = ["FRLL", "FERET"], ["OpenCV", "StyleGAN2"], ["ArcFace"]
    manifest = {
        "fmr": 0.01,
        "datasets": datasets,
        "morph_algorithms": algorithms,
        "fr_systems": fr_systems,
        "vulnerability": [],
        "detectability": [],
    }
    vuln, det = {}, {}
    for alg in algorithms:
        for ds in datasets:
            for fr in fr_systems:
                for sc in SCENARIOS:
                    shift = rng.uniform(0.1, 0.5)
                    rows = [
                        (m, n, i, round(float(v), 4))
                        for m, n, i, v in (
                            (f"m{k:03d}", n, i, rng.normal(0.45 + shift, 0.12))
                            for k in range(int(rng.integers(20, 40)))
                            for n in (1, 2)
                            for i in range(1, int(rng.integers(1, 4)) + 1)
                        )
                    ]
                    imp = [round(float(v), 4) for v in rng.normal(0.3, 0.1, 400)]
                    stem = f"{alg}_{ds}_{fr}_{sc}"
                    with open(root / f"{stem}_sim.csv", "w") as fh:
                        fh.write("morph_id,subject_index,sample_index,score\n")
                        fh.writelines(f"{m},{n},{i},{v!r}\n" for m, n, i, v in rows)
                    with open(root / f"{stem}_imp.csv", "w") as fh:
                        fh.write("score\n")
                        fh.writelines(f"{v!r}\n" for v in imp)
                    manifest["vulnerability"].append(
                        {"dataset": ds, "algorithm": alg, "fr_system": fr, "scenario": sc,
                         "scores": f"{stem}_sim.csv", "impostors": f"{stem}_imp.csv"}
                    )
                    vuln[(alg, ds, fr, sc)] = (rows, imp)
    for comp in COMPOSITIONS:
        for alg in algorithms:
            for sc in SCENARIOS:
                n_bf, n_mo = int(rng.integers(150, 300)), int(rng.integers(150, 300))
                if (comp, alg, sc) == tuple(perfect):
                    bf = [round(float(v), 4) for v in rng.uniform(0.0, 0.4, n_bf)]
                    mo = [round(float(v), 4) for v in rng.uniform(0.6, 1.0, n_mo)]
                else:
                    sep = rng.uniform(0.5, 3.0)
                    bf = [round(float(v), 3) for v in rng.normal(0, 1, n_bf)]
                    mo = [round(float(v), 3) for v in rng.normal(sep, 1, n_mo)]
                name = f"det_{comp.replace('+', '_')}_{alg}_{sc}.csv"
                with open(root / name, "w") as fh:
                    fh.write("image_id,label,score,algorithm,provenance\n")
                    fh.writelines(f"b{k},bonafide,{v!r},,digital\n" for k, v in enumerate(bf))
                    fh.writelines(f"m{k},morph,{v!r},{alg},digital\n" for k, v in enumerate(mo))
                manifest["detectability"].append({"training": comp, "algorithm": alg, "scenario": sc, "scores": name})
                det[(comp, alg, sc)] = (bf, mo)
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path, vuln, det
