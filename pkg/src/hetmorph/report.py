"""Render a :class:`~hetmorph.harness.MetricReport` as CSV, Markdown or JSON.

Percentages are printed with two decimals using round-half-even on the
shortest decimal representation of the value. In Markdown, the maximum of
each column within a morph-algorithm block is bolded; a block column whose
cells are all equal gets no bold.
"""

from __future__ import annotations

import csv
import io
import json
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Dict, List, Optional, Sequence

from .core import DETECTABILITY_ORDER, VULNERABILITY_ORDER
from .harness import COMPOSITION_ORDER, MetricReport, TrainingComposition

FORMATS = ("csv", "markdown", "json")


def fmt_pct(value: float) -> str:
    return str(Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def _target_label(t: float) -> str:
    return f"{fmt_pct(100 * t).rstrip('0').rstrip('.')}%"


def _compositions(report: MetricReport) -> List[str]:
    declared = set(report.training_compositions) | {k[0] for k in report.detectability}
    return [c.value for c in COMPOSITION_ORDER if c.value in declared]


def _bold_block(rows: List[List[Optional[float]]]) -> List[List[bool]]:
    n_cols = len(rows[0]) if rows else 0
    bold = [[False] * n_cols for _ in rows]
    for j in range(n_cols):
        col = [r[j] for r in rows if r[j] is not None]
        if len(set(col)) < 2:
            continue
        top = max(col)
        for i, r in enumerate(rows):
            bold[i][j] = r[j] is not None and r[j] == top
    return bold


def _md_table(header: Sequence[str], align: Sequence[str], body: List[List[str]]) -> List[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(align) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in body]
    return lines


def _vulnerability_md(report: MetricReport) -> List[str]:
    columns = [(ds, fr) for ds in report.datasets for fr in report.fr_systems]
    header = ["Morph", "Scenario"] + [f"{ds} {fr}" for ds, fr in columns]
    align = [":--", ":--"] + ["--:"] * len(columns)
    body = []
    for alg in report.morph_algorithms:
        block = []
        for sc in VULNERABILITY_ORDER:
            cells = [report.vulnerability.get((alg, ds, fr, sc.label)) for ds, fr in columns]
            if all(c is None for c in cells):
                continue
            block.append((sc.label, [None if c is None else round(c.percent, 12) for c in cells]))
        bold = _bold_block([vals for _, vals in block])
        for (label, vals), marks in zip(block, bold):
            row = [alg, label]
            for v, b in zip(vals, marks):
                row.append("n/a" if v is None else (f"**{fmt_pct(v)}**" if b else fmt_pct(v)))
            body.append(row)
    return [f"## Vulnerability: ProdAvg-MMPMR (%) at FMR = {_target_label(report.fmr)}", ""] + _md_table(
        header, align, body
    )


def _det_values(cell, targets) -> List[float]:
    return [round(100 * cell.eer, 12)] + [round(100 * cell.macer[t], 12) for t in targets]


def _detectability_md(report: MetricReport) -> List[str]:
    comps = _compositions(report)
    targets = list(report.bpcer_targets)
    metric_names = ["EER"] + [f"MACER@{_target_label(t)}" for t in targets]
    header = ["Morphing Attack", "Scenario"] + [
        f"{TrainingComposition(c).title} {m}" for c in comps for m in metric_names
    ]
    align = [":--", ":--"] + ["--:"] * (len(header) - 2)
    width = len(metric_names)
    body = []
    for alg in report.morph_algorithms:
        block = []
        for sc in DETECTABILITY_ORDER:
            vals: List[Optional[float]] = []
            any_cell = False
            for c in comps:
                cell = report.detectability.get((c, alg, sc.label))
                if cell is None:
                    vals += [None] * width
                else:
                    any_cell = True
                    vals += _det_values(cell, targets)
            if any_cell:
                block.append((sc.label, vals))
        bold = _bold_block([vals for _, vals in block])
        for (label, vals), marks in zip(block, bold):
            row = [alg, label]
            for v, b in zip(vals, marks):
                row.append("n/a" if v is None else (f"**{fmt_pct(v)}**" if b else fmt_pct(v)))
            body.append(row)
    return ["## Detectability: EER and MACER @ BPCER (%)", ""] + _md_table(header, align, body)


def _provenance_md(report: MetricReport) -> List[str]:
    lines = ["## Provenance", "", f"- hetmorph {report.version}", f"- target FMR: {report.fmr!r}"]
    lines.append("- BPCER targets: " + ", ".join(repr(t) for t in report.bpcer_targets))
    for key in sorted(report.vulnerability):
        c = report.vulnerability[key]
        lines.append(
            f"- vulnerability {'/'.join(key)}: delta={c.calibration.delta!r} "
            f"achieved_fmr={c.calibration.achieved_fmr!r} scores={c.scores} sha256={c.scores_sha256} "
            f"impostors={c.impostors} sha256={c.impostors_sha256}"
        )
    for key in sorted(report.detectability):
        c = report.detectability[key]
        lines.append(f"- detectability {'/'.join(key)}: scores={c.scores} sha256={c.scores_sha256}")
    for a in report.absent:
        lines.append(f"- absent {a.section} {'/'.join(a.key)}: {a.reason}")
    return lines


def render_markdown(report: MetricReport) -> str:
    parts = _vulnerability_md(report) + [""] + _detectability_md(report) + [""] + _provenance_md(report)
    return "\n".join(parts) + "\n"


CSV_HEADER = ["section", "training", "algorithm", "dataset", "fr_system", "scenario", "metric", "percent", "sha256"]


def render_csv(report: MetricReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for key in sorted(report.vulnerability):
        c = report.vulnerability[key]
        w.writerow(
            ["vulnerability", "", c.algorithm, c.dataset, c.fr_system, c.scenario, "prodavg_mmpmr",
             fmt_pct(c.percent), c.scores_sha256]
        )
    for key in sorted(report.detectability):
        c = report.detectability[key]
        w.writerow(["detectability", c.training, c.algorithm, "", "", c.scenario, "eer", fmt_pct(100 * c.eer),
                    c.scores_sha256])
        for t in report.bpcer_targets:
            w.writerow(["detectability", c.training, c.algorithm, "", "", c.scenario,
                        f"macer@{_target_label(t)}", fmt_pct(100 * c.macer[t]), c.scores_sha256])
    return buf.getvalue()


def report_to_dict(report: MetricReport) -> Dict:
    return {
        "version": report.version,
        "fmr": report.fmr,
        "bpcer_targets": list(report.bpcer_targets),
        "datasets": report.datasets,
        "morph_algorithms": report.morph_algorithms,
        "fr_systems": report.fr_systems,
        "training_compositions": report.training_compositions,
        "vulnerability": [
            {
                "algorithm": c.algorithm,
                "dataset": c.dataset,
                "fr_system": c.fr_system,
                "scenario": c.scenario,
                "prodavg_mmpmr": c.value,
                "prodavg_mmpmr_percent": c.percent,
                "delta": c.calibration.delta,
                "target_fmr": c.calibration.target_fmr,
                "achieved_fmr": c.calibration.achieved_fmr,
                "n_impostors": c.calibration.n_impostors,
                "scores": c.scores,
                "scores_sha256": c.scores_sha256,
                "impostors": c.impostors,
                "impostors_sha256": c.impostors_sha256,
            }
            for _, c in sorted(report.vulnerability.items())
        ],
        "detectability": [
            {
                "training": c.training,
                "algorithm": c.algorithm,
                "scenario": c.scenario,
                "eer": c.eer,
                "eer_percent": 100 * c.eer,
                "macer_at_bpcer": [
                    {"bpcer": t, "macer": c.macer[t], "macer_percent": 100 * c.macer[t], "threshold": c.thresholds[t]}
                    for t in report.bpcer_targets
                ],
                "scores": c.scores,
                "scores_sha256": c.scores_sha256,
            }
            for _, c in sorted(report.detectability.items())
        ],
        "absent": [{"section": a.section, "key": list(a.key), "reason": a.reason} for a in report.absent],
    }


def _json_safe(value):
    if isinstance(value, float) and value in (float("inf"), float("-inf")):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_safe(v) for v in value]
    return value


def render_json(report: MetricReport) -> str:
    return json.dumps(_json_safe(report_to_dict(report)), indent=2, sort_keys=True) + "\n"


def render_report(report: MetricReport, format: str = "markdown") -> bytes:
    if format in ("md", "markdown"):
        text = render_markdown(report)
    elif format == "csv":
        text = render_csv(report)
    elif format == "json":
        text = render_json(report)
    else:
        raise ValueError(f"unknown report format {format!r}; choose from {', '.join(FORMATS)}")
    return text.encode("utf-8")
