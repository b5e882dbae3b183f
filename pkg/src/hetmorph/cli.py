"""``hetmorph`` command line interface.

Exit status: 0 success, 1 input error, 2 harness finished with absent cells,
64 usage error. Errors are written to stderr as one line of JSON.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .core import InputError

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PARTIAL = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit_error(kind: str, message: str, status: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit": status}) + "\n")
    return status


def _common() -> argparse.ArgumentParser:
    # Global flags are accepted before or after the subcommand.
    p = _Parser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master random seed (default 0)")
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker threads (default: all cores)")
    p.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS,
                   help="print version and effective configuration to stderr")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="hetmorph", description="Heterogeneous morph-attack evaluation toolkit.",
                     parents=[common])
    parser.add_argument("--version", action="version", version=f"hetmorph {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("morph", parents=[common], help="landmark morph of two face images")
    p.add_argument("--a", required=True, help="first bona fide PNG")
    p.add_argument("--la", required=True, help="landmark JSON for --a")
    p.add_argument("--b", required=True, help="second bona fide PNG")
    p.add_argument("--lb", required=True, help="landmark JSON for --b")
    p.add_argument("--out", required=True, help="output PNG")
    p.add_argument("--alpha", type=float, default=0.5, help="blend factor for geometry and colour (default 0.5)")
    p.add_argument("--no-boundary-points", action="store_true", help="do not add the 8 canvas boundary points")
    p.add_argument("--mesh-debug", metavar="PATH", help="write the triangle mesh as JSON")

    p = sub.add_parser("printscan", parents=[common], help="simulate print-scanning of PNG images")
    p.add_argument("--in", dest="input", required=True, help="input PNG file or directory of PNGs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--preset", default="default", help="default, icc-mismatch, or a preset JSON path")

    p = sub.add_parser("diff", parents=[common], help="amplified difference of digital vs print-scanned image")
    p.add_argument("--a", required=True, help="digital PNG")
    p.add_argument("--b", required=True, help="print-scanned PNG")
    p.add_argument("--gain", type=float, default=1.0, help="amplification factor >= 1 (default 1)")
    p.add_argument("--out", required=True, help="output PNG")

    p = sub.add_parser("metrics", parents=[common], help="compute one metric from a score file")
    msub = p.add_subparsers(dest="metric", metavar="METRIC", parser_class=_Parser)
    msub.required = True
    for name, text in (("mmpmr", "MMPMR (one sample per subject)"), ("prodavg", "ProdAvg-MMPMR")):
        m = msub.add_parser(name, parents=[common], help=text)
        m.add_argument("--scores", required=True, help="similarity CSV")
        m.add_argument("--delta", type=float, required=True, help="verification threshold")
    m = msub.add_parser("eer", parents=[common], help="equal error rate")
    m.add_argument("--scores", required=True, help="classifier CSV")
    m = msub.add_parser("macer", parents=[common], help="MACER at BPCER targets")
    m.add_argument("--scores", required=True, help="classifier CSV")
    m.add_argument("--targets", default="0.001,0.01,0.05", help="comma-separated BPCER targets")
    m.add_argument("--rule", choices=("floor", "ceil"), default="floor",
                   help="threshold rule: largest BPCER <= target (floor) or smallest >= target (ceil)")
    m = msub.add_parser("roc", parents=[common], help="ROC operating points as CSV")
    m.add_argument("--scores", required=True, help="classifier CSV")

    p = sub.add_parser("calibrate", parents=[common], help="threshold at a target FMR")
    p.add_argument("--impostors", required=True, help="impostor CSV (header: score)")
    p.add_argument("--fmr", type=float, default=0.001, help="target false match rate (default 0.001)")

    p = sub.add_parser("kfold", parents=[common], help="stratified k-fold split of a classifier CSV")
    p.add_argument("--scores", required=True, help="classifier CSV")
    p.add_argument("--k", type=int, default=5, help="number of folds (default 5)")
    p.add_argument("--out", help="write folds JSON here instead of stdout")

    p = sub.add_parser("harness", parents=[common], help="run a manifest and write reports")
    p.add_argument("--manifest", required=True, help="manifest JSON")
    p.add_argument("--out-dir", required=True, help="directory for report.{md,csv,json}")
    p.add_argument("--formats", default="markdown,csv,json", help="comma-separated subset of markdown,csv,json")

    p = sub.add_parser("ema", parents=[common], help="EMA decay for a batch size")
    p.add_argument("--batch-size", type=int, required=True, help="training batch size")
    return parser


def _derived_seed(seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _cmd_morph(args):
    from .io import load_landmarks, read_png, write_png
    from .morph import MorphParams, morph

    params = MorphParams(args.alpha, not args.no_boundary_points)
    image, mesh, quality = morph(
        read_png(args.a), load_landmarks(args.la), read_png(args.b), load_landmarks(args.lb), params, args.jobs
    )
    write_png(image, args.out)
    if args.mesh_debug:
        Path(args.mesh_debug).write_text(json.dumps(mesh.to_json()) + "\n", encoding="utf-8")
    print(json.dumps(quality.__dict__, sort_keys=True))
    return EXIT_OK


def _cmd_printscan(args):
    from .io import read_png, write_png
    from .printscan import load_preset, simulate_print_scan

    params = load_preset(args.preset)
    src = Path(args.input)
    files = sorted(src.glob("*.png")) if src.is_dir() else [src]
    if not files:
        raise InputError(f"no PNG files in {src}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def one(path):
        seed = _derived_seed(args.seed, path.name)
        write_png(simulate_print_scan(read_png(path), replace(params, seed=seed)), out / path.name)
        return path.name, seed

    if args.jobs > 1 and len(files) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            done = list(pool.map(one, files))
    else:
        done = [one(f) for f in files]
    log = {"preset": params.to_json(), "master_seed": args.seed, "images": {n: s for n, s in done}}
    (out / "printscan.json").write_text(json.dumps(log, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_diff(args):
    from .io import read_png, write_png
    from .printscan import artifact_energy, difference_image

    a, b = read_png(args.a), read_png(args.b)
    write_png(difference_image(a, b, args.gain), args.out)
    print(repr(artifact_energy(a, b)))
    return EXIT_OK


def _cmd_metrics(args):
    from . import metrics
    from .io import load_classifier_scores, load_similarity_scores

    if args.metric in ("mmpmr", "prodavg"):
        scores = load_similarity_scores(args.scores)
        fn = metrics.mmpmr if args.metric == "mmpmr" else metrics.prodavg_mmpmr
        print(repr(fn(scores, args.delta)))
        return EXIT_OK
    records = load_classifier_scores(args.scores)
    if args.metric == "eer":
        print(repr(metrics.equal_error_rate(records)))
    elif args.metric == "macer":
        try:
            targets = [float(t) for t in args.targets.split(",") if t.strip()]
        except ValueError:
            raise UsageError(f"invalid --targets {args.targets!r}") from None
        rep = metrics.macer_at_bpcer(records, targets, args.rule)
        print(json.dumps({"eer": rep.eer, "macer_at_bpcer": {repr(t): rep.macer_at_bpcer[t] for t in targets}}))
    else:
        roc = metrics.compute_roc(records)
        print("threshold,bpcer,macer")
        for t, far, frr in zip(roc.thresholds, roc.far, roc.frr):
            print(f"{float(t)!r},{float(far)!r},{float(frr)!r}")
    return EXIT_OK


def _cmd_calibrate(args):
    from .io import load_impostor_scores
    from .metrics import calibrate_threshold

    cal = calibrate_threshold(load_impostor_scores(args.impostors), args.fmr)
    print(json.dumps(cal.__dict__, sort_keys=True))
    return EXIT_OK


def _cmd_kfold(args):
    from .harness import stratified_kfold
    from .io import load_classifier_scores

    records = load_classifier_scores(args.scores)
    folds = stratified_kfold(records, args.k, args.seed)
    doc = {
        "k": args.k,
        "seed": args.seed,
        "folds": [
            {"train": [records[i].image_id for i in tr], "validation": [records[i].image_id for i in va]}
            for tr, va in folds
        ],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_harness(args):
    from .harness import load_manifest, run_manifest
    from .report import FORMATS, render_report

    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    for f in formats:
        if f not in FORMATS:
            raise UsageError(f"unknown format {f!r}; choose from {', '.join(FORMATS)}")
    report = run_manifest(load_manifest(args.manifest), args.jobs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    suffix = {"markdown": "md", "csv": "csv", "json": "json"}
    for f in formats:
        (out / f"report.{suffix[f]}").write_bytes(render_report(report, f))
    if report.absent:
        for a in report.absent:
            sys.stderr.write(json.dumps({"absent": a.section, "key": list(a.key), "reason": a.reason}) + "\n")
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_ema(args):
    from .metrics import ema_decay

    print(repr(ema_decay(args.batch_size)))
    return EXIT_OK


COMMANDS = {
    "morph": _cmd_morph,
    "printscan": _cmd_printscan,
    "diff": _cmd_diff,
    "metrics": _cmd_metrics,
    "calibrate": _cmd_calibrate,
    "kfold": _cmd_kfold,
    "harness": _cmd_harness,
    "ema": _cmd_ema,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _emit_error("usage", str(exc), EXIT_USAGE)
    args.seed = getattr(args, "seed", 0)
    args.jobs = getattr(args, "jobs", None)
    if args.jobs is None:
        args.jobs = os.cpu_count() or 1
    args.verbose = getattr(args, "verbose", False)
    if args.jobs < 1:
        return _emit_error("usage", "--jobs must be >= 1", EXIT_USAGE)
    if args.verbose:
        from . import _accel

        config = {k: v for k, v in sorted(vars(args).items())}
        sys.stderr.write(f"hetmorph {__version__} (backend: {_accel.BACKEND})\n")
        sys.stderr.write(json.dumps(config, sort_keys=True, default=str) + "\n")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _emit_error("usage", str(exc), EXIT_USAGE)
    except InputError as exc:
        return _emit_error("input", str(exc), EXIT_INPUT)
    except OSError as exc:
        return _emit_error("io", str(exc), EXIT_INPUT)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
