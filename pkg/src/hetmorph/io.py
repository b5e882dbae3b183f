"""Readers and writers for score CSVs, landmark JSON and PNG images.

CSV files may start with ``#`` directive lines before the header. The only
directive understood is ``# score_direction: asc|desc``; ``asc`` (default)
means a higher score is more similar (similarity files) or more morph-like
(classifier files). ``desc`` files are negated on load so the rest of the
toolkit only ever sees the ``asc`` convention.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from PIL import Image

from .core import (
    ClassifierRecord,
    ImageBuffer,
    ImposterScoreSet,
    InputError,
    Label,
    LandmarkSet,
    MediaProvenance,
    MorphScoreSet,
    SimilarityRecord,
    check_unique_ids,
)

PathLike = Union[str, os.PathLike]

SIMILARITY_HEADER = ["morph_id", "subject_index", "sample_index", "score"]
CLASSIFIER_HEADER = ["image_id", "label", "score", "algorithm", "provenance"]
IMPOSTOR_HEADER = ["score"]

# 300 PPI expressed in pixels per metre, as stored in the PNG pHYs chunk.
PPI_300_PER_METRE = 11811


def _read_table(path: PathLike, expected_header: Sequence[str]):
    """Yield ``(line_number, row)`` pairs and the score direction sign."""
    path = str(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise InputError("file not found", path=path) from None
    lines = text.splitlines()
    sign = 1.0
    start = 0
    while start < len(lines) and (lines[start].startswith("#") or not lines[start].strip()):
        directive = lines[start].lstrip("#").strip()
        if ":" in directive:
            key, value = (s.strip() for s in directive.split(":", 1))
            if key == "score_direction":
                if value not in ("asc", "desc"):
                    raise InputError(f"score_direction must be asc or desc, got {value!r}", start + 1, path)
                sign = -1.0 if value == "desc" else 1.0
        start += 1
    if start >= len(lines):
        raise InputError("no records", path=path)
    reader = csv.reader(lines[start:])
    header = [h.strip() for h in next(reader)]
    if header != list(expected_header):
        raise InputError(f"expected header {','.join(expected_header)}, got {','.join(header)}", start + 1, path)
    rows = []
    for offset, row in enumerate(reader):
        lineno = start + 2 + offset
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(expected_header):
            raise InputError(f"expected {len(expected_header)} fields, got {len(row)}", lineno, path)
        rows.append((lineno, [c.strip() for c in row]))
    if not rows:
        raise InputError("no records", path=path)
    return rows, sign


def _parse_float(text: str, lineno: int, path: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"malformed score {text!r}", lineno, path) from None
    if not math.isfinite(value):
        raise InputError(f"non-finite score {text!r}", lineno, path)
    return value


def _parse_index(text: str, what: str, lineno: int, path: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise InputError(f"malformed {what} {text!r}", lineno, path) from None
    if value < 1:
        raise InputError(f"{what} must be >= 1, got {value}", lineno, path)
    return value


def load_similarity_scores(path: PathLike) -> MorphScoreSet:
    path = str(path)
    rows, sign = _read_table(path, SIMILARITY_HEADER)
    records = []
    seen = {}
    for lineno, (morph_id, n, i, score) in rows:
        if not morph_id:
            raise InputError("empty morph_id", lineno, path)
        rec = SimilarityRecord(
            morph_id,
            _parse_index(n, "subject_index", lineno, path),
            _parse_index(i, "sample_index", lineno, path),
            sign * _parse_float(score, lineno, path),
        )
        key = (rec.morph_id, rec.subject_index, rec.sample_index)
        if key in seen:
            raise InputError(f"duplicate triple {key} (first seen on line {seen[key]})", lineno, path)
        seen[key] = lineno
        records.append(rec)
    try:
        return MorphScoreSet.from_records(records)
    except InputError as exc:
        raise InputError(exc.message, path=path) from None


def dump_similarity_scores(scores: MorphScoreSet) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SIMILARITY_HEADER)
    for r in scores.records:
        writer.writerow([r.morph_id, r.subject_index, r.sample_index, repr(float(r.score))])
    return buf.getvalue()


def save_similarity_scores(scores: MorphScoreSet, path: PathLike) -> None:
    Path(path).write_text(dump_similarity_scores(scores), encoding="utf-8")


def load_impostor_scores(path: PathLike) -> ImposterScoreSet:
    path = str(path)
    rows, sign = _read_table(path, IMPOSTOR_HEADER)
    return ImposterScoreSet(np.array([sign * _parse_float(r[0], n, path) for n, r in rows]))


def save_impostor_scores(scores: Sequence[float], path: PathLike) -> None:
    lines = ["score"] + [repr(float(s)) for s in scores]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_classifier_scores(path: PathLike) -> List[ClassifierRecord]:
    path = str(path)
    rows, sign = _read_table(path, CLASSIFIER_HEADER)
    records = []
    seen = {}
    for lineno, (image_id, label, score, algorithm, provenance) in rows:
        if not image_id:
            raise InputError("empty image_id", lineno, path)
        if image_id in seen:
            raise InputError(f"duplicate image_id {image_id!r} (first seen on line {seen[image_id]})", lineno, path)
        seen[image_id] = lineno
        try:
            lab = Label(label.lower())
        except ValueError:
            raise InputError(f"unknown label {label!r} (expected bonafide or morph)", lineno, path) from None
        try:
            prov = MediaProvenance.parse(provenance)
        except InputError as exc:
            raise InputError(exc.message, lineno, path) from None
        records.append(
            ClassifierRecord(image_id, lab, sign * _parse_float(score, lineno, path), prov, algorithm or None)
        )
    return records


def dump_classifier_scores(records: Sequence[ClassifierRecord]) -> str:
    check_unique_ids(records)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CLASSIFIER_HEADER)
    for r in records:
        writer.writerow(
            [r.image_id, r.label.value, repr(float(r.detection_score)), r.morph_algorithm or "", r.provenance.value]
        )
    return buf.getvalue()


def save_classifier_scores(records: Sequence[ClassifierRecord], path: PathLike) -> None:
    Path(path).write_text(dump_classifier_scores(records), encoding="utf-8")


def load_landmarks(path: PathLike) -> LandmarkSet:
    path = str(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise InputError("file not found", path=path) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg}", exc.lineno, path) from None
    if not isinstance(doc, dict) or not {"width", "height", "points"} <= doc.keys():
        raise InputError("landmark file must be an object with width, height and points", path=path)
    points = doc["points"]
    if not isinstance(points, list) or any(not isinstance(p, list) or len(p) != 2 for p in points):
        raise InputError("points must be a list of [x, y] pairs", path=path)
    try:
        return LandmarkSet(np.array(points, dtype=np.float64), int(doc["width"]), int(doc["height"]))
    except InputError as exc:
        raise InputError(exc.message, path=path) from None


def save_landmarks(landmarks: LandmarkSet, path: PathLike) -> None:
    doc = {
        "width": landmarks.image_width,
        "height": landmarks.image_height,
        "points": [[float(x), float(y)] for x, y in landmarks.points],
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def read_png(path: PathLike) -> ImageBuffer:
    path = str(path)
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError:
        raise InputError("file not found", path=path) from None
    except OSError as exc:
        raise InputError(f"cannot read image: {exc}", path=path) from None
    if img.mode in ("RGBA", "LA", "PA", "RGBa", "La") or "transparency" in img.info:
        raise InputError(f"images with an alpha channel are not supported (mode {img.mode})", path=path)
    if img.mode not in ("RGB", "L", "P", "1"):
        raise InputError(f"expected an 8-bit RGB image, got mode {img.mode}", path=path)
    ppi = None
    dpi = img.info.get("dpi")
    if dpi:
        ppi = int(round(float(dpi[0]))) or None
    return ImageBuffer(np.asarray(img.convert("RGB"), dtype=np.uint8), ppi=ppi)


def encode_png(image: ImageBuffer) -> bytes:
    """Encode to PNG bytes; a set ``ppi`` is written as a pHYs chunk."""
    buf = io.BytesIO()
    kwargs = {}
    if image.ppi is not None:
        kwargs["dpi"] = (image.ppi, image.ppi)
    Image.fromarray(np.asarray(image.pixels)).save(buf, format="PNG", **kwargs)
    return buf.getvalue()


def write_png(image: ImageBuffer, path: PathLike) -> None:
    Path(path).write_bytes(encode_png(image))


def png_phys(data: bytes) -> Optional[tuple]:
    """Return ``(x_ppu, y_ppu, unit)`` from the pHYs chunk of PNG bytes, if any."""
    import struct

    if data[:8] != b"\x89PNG\r\n\x1a\n":
        raise InputError("not a PNG stream")
    pos = 8
    while pos + 8 <= len(data):
        length, ctype = struct.unpack(">I4s", data[pos : pos + 8])
        if ctype == b"pHYs":
            return struct.unpack(">IIB", data[pos + 8 : pos + 17])
        if ctype == b"IEND":
            break
        pos += 12 + length
    return None
