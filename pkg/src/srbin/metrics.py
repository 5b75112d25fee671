"""PSNR, SSIM and F-measure.

PSNR uses an 8-bit peak of 255. SSIM uses the usual defaults: an 11x11
Gaussian window with sigma 1.5, K1 = 0.01, K2 = 0.03, averaged over the
windows that fit entirely inside the image (no padding).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from srbin import kernels
from srbin.errors import ChannelsMismatch, ImageTooSmall, SizeMismatch
from srbin.raster import BinaryMask, Raster, raster_from_mask

PEAK = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
C1 = (SSIM_K1 * PEAK) ** 2
C2 = (SSIM_K2 * PEAK) ** 2

SETTINGS = {
    "psnr_peak": PEAK,
    "ssim_window": SSIM_WINDOW,
    "ssim_sigma": SSIM_SIGMA,
    "ssim_k1": SSIM_K1,
    "ssim_k2": SSIM_K2,
    "ssim_padding": "valid",
    "metric_input": "masks rendered 0 (text) / 255 (background)",
}


class Psnr(NamedTuple):
    mse: float
    psnr_db: Optional[float]  # None when the images are identical


class FMeasure(NamedTuple):
    precision: float
    recall: float
    f_measure: float
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass(frozen=True)
class MetricReport:
    mse: float
    psnr_db: Optional[float]
    ssim: Optional[float]
    precision: Optional[float] = None
    recall: Optional[float] = None
    f_measure: Optional[float] = None
    tp: Optional[int] = None
    fp: Optional[int] = None
    fn: Optional[int] = None
    tn: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "psnr_db": self.psnr_db,
            "mse": self.mse,
            "ssim": self.ssim,
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "counts": None if self.tp is None else {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
        }

    @classmethod
    def from_dict(cls, d: dict) -> MetricReport:
        counts = d.get("counts") or {}
        return cls(
            mse=d["mse"],
            psnr_db=d.get("psnr_db"),
            ssim=d.get("ssim"),
            precision=d.get("precision"),
            recall=d.get("recall"),
            f_measure=d.get("f_measure"),
            tp=counts.get("tp"),
            fp=counts.get("fp"),
            fn=counts.get("fn"),
            tn=counts.get("tn"),
        )


def _gray_pair(a: Raster, b: Raster) -> tuple[np.ndarray, np.ndarray]:
    if a.channels != 1 or b.channels != 1:
        raise ChannelsMismatch("metrics compare 1-channel rasters")
    if a.size != b.size:
        raise SizeMismatch(f"size mismatch: {a.width}x{a.height} vs {b.width}x{b.height}")
    return a.pixels, b.pixels


def psnr(a: Raster, b: Raster) -> Psnr:
    pa, pb = _gray_pair(a, b)
    diff = pa.astype(np.int64) - pb.astype(np.int64)
    mse = float((diff * diff).sum()) / diff.size
    if mse == 0.0:
        return Psnr(0.0, None)
    return Psnr(mse, 10.0 * math.log10(PEAK * PEAK / mse))


def gaussian_taps(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size // 2)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def ssim_map(a: Raster, b: Raster) -> np.ndarray:
    pa, pb = _gray_pair(a, b)
    if pa.shape[0] < SSIM_WINDOW or pa.shape[1] < SSIM_WINDOW:
        raise ImageTooSmall(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.width}x{a.height}")
    x = pa.astype(np.float64)
    y = pb.astype(np.float64)
    g = gaussian_taps()
    mu_x = kernels.filter_valid(x, g)
    mu_y = kernels.filter_valid(y, g)
    var_x = kernels.filter_valid(x * x, g) - mu_x * mu_x
    var_y = kernels.filter_valid(y * y, g) - mu_y * mu_y
    cov = kernels.filter_valid(x * y, g) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + C1) * (2.0 * cov + C2)
    den = (mu_x * mu_x + mu_y * mu_y + C1) * (var_x + var_y + C2)
    return num / den


def ssim(a: Raster, b: Raster) -> float:
    return float(ssim_map(a, b).mean())


def f_measure(pred: BinaryMask, gt: BinaryMask) -> FMeasure:
    """Foreground precision/recall/F1.

    Empty-set conventions: both masks empty scores 1 everywhere; an empty
    ground truth with any predicted text scores 0; ``P + R == 0`` gives F 0.
    """
    if pred.size != gt.size:
        raise SizeMismatch(f"size mismatch: {pred.width}x{pred.height} vs {gt.width}x{gt.height}")
    p, g = pred.foreground, gt.foreground
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = p.size - tp - fp - fn
    if tp + fn == 0:
        score = 1.0 if fp == 0 else 0.0
        return FMeasure(score, score, score, tp, fp, fn, tn)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn)
    fm = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return FMeasure(precision, recall, fm, tp, fp, fn, tn)


def metric_suite(pred: BinaryMask, gt: BinaryMask) -> MetricReport:
    """PSNR/SSIM on the 0/255 renders plus F-measure on the masks.

    SSIM is left as ``None`` when the masks are smaller than one window.
    """
    if pred.size != gt.size:
        raise SizeMismatch(f"size mismatch: {pred.width}x{pred.height} vs {gt.width}x{gt.height}")
    ra, rb = raster_from_mask(pred), raster_from_mask(gt)
    p = psnr(ra, rb)
    s = ssim(ra, rb) if min(pred.size) >= SSIM_WINDOW else None
    fm = f_measure(pred, gt)
    return MetricReport(
        mse=p.mse,
        psnr_db=p.psnr_db,
        ssim=s,
        precision=fm.precision,
        recall=fm.recall,
        f_measure=fm.f_measure,
        tp=fm.tp,
        fp=fm.fp,
        fn=fm.fn,
        tn=fm.tn,
    )
