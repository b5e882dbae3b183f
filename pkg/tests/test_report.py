import csv
import io
import json

import pytest

from hetmorph.harness import DetectabilityCell, MetricReport, VulnerabilityCell, load_manifest, run_manifest
from hetmorph.metrics import ThresholdCalibration
from hetmorph.report import fmt_pct, render_report

from helpers import write_synthetic_study

TARGETS = (0.001, 0.01, 0.05)


def vcell(alg, ds, fr, sc, value):
    cal = ThresholdCalibration(0.5, 0.001, 0.0, 10)
    return VulnerabilityCell(alg, ds, fr, sc, value, cal, "s.csv", "0" * 64, "i.csv", "1" * 64)


def dcell(comp, alg, sc, eer, macers):
    return DetectabilityCell(comp, alg, sc, eer, dict(zip(TARGETS, macers)), dict(zip(TARGETS, (1.0,) * 3)),
                             "c.csv", "2" * 64)


def base_report(**kw):
    return MetricReport(datasets=["FRLL"], morph_algorithms=["OpenCV"], fr_systems=["ArcFace"],
                        training_compositions=["digital", "digital+print-scan", "print-scan"], **kw)


def table_rows(md, heading):
    lines = md.split("\n")
    start = next(i for i, ln in enumerate(lines) if ln.startswith(heading))
    rows = []
    for ln in lines[start + 2:]:
        if not ln.startswith("|"):
            break
        rows.append([c.strip() for c in ln.strip("|").split("|")])
    return rows[0], rows[2:]


@pytest.mark.parametrize(
    "value, text",
    [(99.015, "99.02"), (0.125, "0.12"), (0.135, "0.14"), (0.0, "0.00"), (100.0, "100.00"), (12.344999, "12.34")],
)
def test_fmt_pct_half_even_on_shortest_repr(value, text):
    assert fmt_pct(value) == text


def test_empty_vulnerability_is_header_only():
    md = render_report(base_report(), "markdown").decode()
    header, body = table_rows(md, "## Vulnerability")
    assert header == ["Morph", "Scenario", "FRLL ArcFace"]
    assert body == []


def test_single_cell_row():
    r = base_report(vulnerability={("OpenCV", "FRLL", "ArcFace", "D-PS"): vcell("OpenCV", "FRLL", "ArcFace", "D-PS", 0.99015)})
    _, body = table_rows(render_report(r, "markdown").decode(), "## Vulnerability")
    # a single value in its column is not bolded
    assert body == [["OpenCV", "D-PS", "99.02"]]


def test_vulnerability_row_order_and_bold():
    cells = {}
    for sc, v in zip(["PS-PS", "PS-D", "D-PS", "D-D"], [0.4, 0.9, 0.3, 0.1]):
        cells[("OpenCV", "FRLL", "ArcFace", sc)] = vcell("OpenCV", "FRLL", "ArcFace", sc, v)
    _, body = table_rows(render_report(base_report(vulnerability=cells), "markdown").decode(), "## Vulnerability")
    assert [r[1] for r in body] == ["D-D", "D-PS", "PS-D", "PS-PS"]
    assert [r[2] for r in body] == ["10.00", "30.00", "**90.00**", "40.00"]


def test_detectability_order_zero_row_and_ties():
    cells = {
        ("digital", "OpenCV", "D-D"): dcell("digital", "OpenCV", "D-D", 0.1, (0.5, 0.4, 0.3)),
        ("digital", "OpenCV", "D-PS"): dcell("digital", "OpenCV", "D-PS", 0.2, (0.5, 0.2, 0.1)),
        ("digital", "OpenCV", "PS-D"): dcell("digital", "OpenCV", "PS-D", 0.0, (0.0, 0.0, 0.0)),
        ("digital", "OpenCV", "PS-PS"): dcell("digital", "OpenCV", "PS-PS", 0.3, (0.9, 0.8, 0.7)),
    }
    md = render_report(base_report(detectability=cells), "markdown").decode()
    header, body = table_rows(md, "## Detectability")
    assert header[2:6] == ["Digital EER", "Digital MACER@0.1%", "Digital MACER@1%", "Digital MACER@5%"]
    assert [r[1] for r in body] == ["D-D", "PS-D", "D-PS", "PS-PS"]
    assert body[1][2:6] == ["0.00", "0.00", "0.00", "0.00"]
    # compositions without cells render n/a
    assert body[0][6] == "n/a"
    assert body[3][2] == "**30.00**"


def test_tied_column_not_bolded():
    cells = {
        ("digital", "OpenCV", sc): dcell("digital", "OpenCV", sc, 0.0, (0.0, 0.0, 0.0)) for sc in ("D-D", "PS-D")
    }
    md = render_report(base_report(detectability=cells), "markdown").decode()
    assert "**" not in md


def test_csv_and_json_shapes():
    r = base_report(
        vulnerability={("OpenCV", "FRLL", "ArcFace", "D-D"): vcell("OpenCV", "FRLL", "ArcFace", "D-D", 0.5)},
        detectability={("digital", "OpenCV", "D-D"): dcell("digital", "OpenCV", "D-D", 0.25, (1.0, 0.5, 0.125))},
    )
    rows = list(csv.DictReader(io.StringIO(render_report(r, "csv").decode())))
    assert [(x["metric"], x["percent"]) for x in rows] == [
        ("prodavg_mmpmr", "50.00"), ("eer", "25.00"), ("macer@0.1%", "100.00"),
        ("macer@1%", "50.00"), ("macer@5%", "12.50"),
    ]
    doc = json.loads(render_report(r, "json"))
    assert doc["vulnerability"][0]["prodavg_mmpmr"] == 0.5
    assert doc["detectability"][0]["macer_at_bpcer"][2] == {
        "bpcer": 0.05, "macer": 0.125, "macer_percent": 12.5, "threshold": 1.0,
    }


def test_unknown_format():
    with pytest.raises(ValueError):
        render_report(base_report(), "xml")


def test_rendering_is_deterministic(tmp_path):
    path, _, _ = write_synthetic_study(tmp_path, seed=5)
    a = run_manifest(load_manifest(path))
    b = run_manifest(load_manifest(path), jobs=3)
    for fmt in ("markdown", "csv", "json"):
        assert render_report(a, fmt) == render_report(a, fmt) == render_report(b, fmt)
    assert a.vulnerability[("OpenCV", "FRLL", "ArcFace", "D-D")].scores_sha256 in render_report(a, "markdown").decode()
