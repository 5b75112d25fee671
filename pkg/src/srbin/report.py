"""Rendering: report tables (json/csv/markdown) and side-by-side montages."""
from __future__ import annotations

import csv
import io
import json

import numpy as np

from srbin.metrics import MetricReport
from srbin.protocol import WITH_SR, WITHOUT_SR, ExperimentReport
from srbin.raster import BinaryMask, Raster, raster_from_mask
from srbin.resample import resample

FORMATS = ("json", "csv", "markdown")
BRANCH_LABELS = {WITH_SR: "w/ SR", WITHOUT_SR: "w/o SR"}
# decimals per column, matching the published table (PSNR 2, SSIM 4)
PRECISION = {"psnr_db": 2, "ssim": 4, "f_measure": 4}

SEPARATOR_WIDTH = 4
SEPARATOR_VALUE = 128


def fmt(value, decimals: int, none: str = "n/a") -> str:
    if value is None:
        return none
    return f"{value:.{decimals}f}"


def _psnr_cell(agg, none: str = "n/a") -> str:
    # an aggregate with no finite PSNR came entirely from identical images
    if agg.psnr_db is None and agg.infinite_psnr_count:
        return "inf"
    return fmt(agg.psnr_db, PRECISION["psnr_db"], none)


def render_report(report: ExperimentReport, format: str = "markdown") -> str:
    if format == "json":
        return report.to_json()
    if format == "csv":
        return _report_csv(report)
    if format == "markdown":
        return _report_markdown(report)
    raise ValueError(f"unknown format {format!r}; expected one of {', '.join(FORMATS)}")


def _report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["branch", "psnr_db", "ssim", "f_measure", "n", "infinite_psnr_count", "excluded"])
    for branch, agg in report.aggregates.items():
        writer.writerow([
            branch,
            _psnr_cell(agg, none=""),
            fmt(agg.ssim, 4, ""),
            fmt(agg.f_measure, 4, ""),
            agg.n,
            agg.infinite_psnr_count,
            report.excluded.get(branch, 0),
        ])
    if report.deltas is not None:
        d = report.deltas
        writer.writerow([
            "delta",
            fmt(d["psnr_db"], 2, ""),
            fmt(d["ssim"], 4, ""),
            fmt(d["f_measure"], 4, ""),
            "",
            "",
            "",
        ])
    return buf.getvalue()


def _report_markdown(report: ExperimentReport) -> str:
    cfg = report.config
    lines = [f"# {report.dataset_name}", ""]
    sr, seg = cfg.get("sr", {}), cfg.get("seg", {})
    lines.append("SR stage: " + ", ".join(f"{k}={v}" for k, v in sr.items()))
    lines.append("")
    lines.append("Segmentation stage: " + ", ".join(f"{k}={v}" for k, v in seg.items()))
    lines.append("")
    lines += ["| Method | PSNR | SSIM | FM |", "|---|---:|---:|---:|"]
    for branch, agg in report.aggregates.items():
        label = BRANCH_LABELS.get(branch, branch)
        lines.append(f"| {label} | {_psnr_cell(agg)} | {fmt(agg.ssim, 4)} | {fmt(agg.f_measure, 4)} |")
    if report.deltas is not None:
        d = report.deltas
        lines.append(
            f"| delta (w/ - w/o) | {fmt(d['psnr_db'], 2)} | {fmt(d['ssim'], 4)} | {fmt(d['f_measure'], 4)} |"
        )
    lines.append("")
    counts = ", ".join(
        f"{b}: {a.n} scored, {report.excluded.get(b, 0)} excluded, {a.infinite_psnr_count} infinite PSNR"
        for b, a in report.aggregates.items()
    )
    lines.append(f"Images: {counts}")
    errors = [
        r["error"] for branches in report.per_image.values() for r in branches.values() if isinstance(r, dict)
    ]
    if errors:
        lines += ["", "Failures:", ""] + [f"- {e}" for e in errors]
    ref = report.reference
    if ref:
        lines += ["", f"## Reference: {ref['name']}", "", "| Method | Metric | Expected | Measured | Within tolerance |",
                  "|---|---|---:|---:|---|"]
        for branch, row in ref["branches"].items():
            for metric, cell in row.items():
                dec = PRECISION[metric]
                lines.append(
                    f"| {BRANCH_LABELS.get(branch, branch)} | {metric} | {fmt(cell['expected'], dec)} | "
                    f"{fmt(cell['measured'], dec)} | {'yes' if cell['within_tolerance'] else 'no'} |"
                )
        rd = ref["reference_deltas"]
        lines += ["", f"Reference deltas: PSNR {fmt(rd['psnr_db'], 2)} dB, SSIM {fmt(rd['ssim'], 4)}"]
        if "note" in ref:
            lines += ["", f"Note: {ref['note']}."]
    return "\n".join(lines) + "\n"


def render_metrics(report: MetricReport, format: str = "json") -> str:
    """Render a single image-pair comparison."""
    if format == "json":
        return json.dumps(report.to_dict(), indent=2) + "\n"
    psnr = "inf" if report.psnr_db is None else fmt(report.psnr_db, 2)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["psnr_db", "mse", "ssim", "precision", "recall", "f_measure", "tp", "fp", "fn", "tn"])
        writer.writerow([
            psnr, repr(report.mse), fmt(report.ssim, 4, ""), fmt(report.precision, 4, ""),
            fmt(report.recall, 4, ""), fmt(report.f_measure, 4, ""),
            report.tp, report.fp, report.fn, report.tn,
        ])
        return buf.getvalue()
    if format == "markdown":
        return (
            "| PSNR | SSIM | Precision | Recall | FM |\n|---:|---:|---:|---:|---:|\n"
            f"| {psnr} | {fmt(report.ssim, 4)} | {fmt(report.precision, 4)} | "
            f"{fmt(report.recall, 4)} | {fmt(report.f_measure, 4)} |\n"
        )
    raise ValueError(f"unknown format {format!r}; expected one of {', '.join(FORMATS)}")


def render_montage(input: Raster, gt: BinaryMask, with_sr: BinaryMask, without_sr_upscaled: BinaryMask) -> Raster:
    """Panels left to right: input, ground truth, with-SR mask, without-SR mask.

    Panels are scaled (nearest) to the tallest panel's height and separated by
    mid-gray columns. The output is RGB only when the input is.
    """
    panels = [input, raster_from_mask(gt), raster_from_mask(with_sr), raster_from_mask(without_sr_upscaled)]
    height = max(p.height for p in panels)
    channels = input.channels
    scaled = []
    for p in panels:
        if p.height != height:
            # only ever enlarges, so the width cannot collapse to zero
            width = int(np.floor(p.width * height / p.height + 0.5))
            p = resample(p, width, height, "nearest")
        px = p.pixels
        if channels == 3 and px.ndim == 2:
            px = np.repeat(px[:, :, None], 3, axis=2)
        scaled.append(px)
    sep_shape = (height, SEPARATOR_WIDTH) if channels == 1 else (height, SEPARATOR_WIDTH, 3)
    sep = np.full(sep_shape, SEPARATOR_VALUE, dtype=np.uint8)
    parts = []
    for i, px in enumerate(scaled):
        if i:
            parts.append(sep)
        parts.append(px)
    return Raster(np.concatenate(parts, axis=1))
