"""Integer-free image resizing with center-aligned sampling.

Output pixel ``d`` samples source coordinate ``(d + 0.5) * n_in / n_out - 0.5``.
Taps falling outside the image are clamped to the edge and every pixel's tap
weights are renormalised to sum to one, so constant images stay constant and
borders are not darkened. Accumulation runs in float64 across both passes;
rounding (half up) and clamping to ``[0, 255]`` happen once, at the end.
"""
from __future__ import annotations

import math

import numpy as np

from srbin import kernels
from srbin.errors import ImageTooSmall, InvalidKernel
from srbin.raster import Raster

KERNELS = ("nearest", "bilinear", "bicubic", "lanczos3", "box")
UPSCALE_KERNELS = KERNELS[:-1]

BICUBIC_A = -0.5

_SUPPORT = {"bilinear": 1, "bicubic": 2, "lanczos3": 3}


def keys_cubic(x: float, a: float = BICUBIC_A) -> float:
    x = abs(x)
    if x <= 1.0:
        return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    if x < 2.0:
        return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    return 0.0


def lanczos3(x: float) -> float:
    x = abs(x)
    if x == 0.0:
        return 1.0
    if x >= 3.0 or x == math.floor(x):
        return 0.0
    px = math.pi * x
    return 3.0 * math.sin(px) * math.sin(px / 3.0) / (px * px)


def triangle(x: float) -> float:
    return max(0.0, 1.0 - abs(x))


_KERNEL_FN = {"bilinear": triangle, "bicubic": keys_cubic, "lanczos3": lanczos3}


def _check_kernel(kernel: str) -> None:
    if kernel not in KERNELS:
        raise InvalidKernel(f"unknown kernel {kernel!r}; expected one of {', '.join(KERNELS)}")


def axis_weights(n_in: int, n_out: int, kernel: str) -> tuple[np.ndarray, np.ndarray]:
    """Tap indices and normalised weights for resizing one axis.

    Returns ``(idx, wts)``, both shaped ``(n_out, taps)``. Padding taps carry
    weight zero.
    """
    _check_kernel(kernel)
    ratio = n_in / n_out
    rows = []
    for d in range(n_out):
        centre = (d + 0.5) * n_in / n_out - 0.5
        if kernel == "nearest":
            rows.append(([min(max(math.floor(centre + 0.5), 0), n_in - 1)], [1.0]))
            continue
        if kernel == "box":
            lo, hi = d * ratio, (d + 1) * ratio
            taps = []
            for i in range(math.floor(lo), math.ceil(hi)):
                overlap = min(hi, i + 1) - max(lo, i)
                if overlap > 0:
                    taps.append((min(i, n_in - 1), overlap))
            idx, w = zip(*taps)
            rows.append((list(idx), list(w)))
            continue
        support = _SUPPORT[kernel]
        fn = _KERNEL_FN[kernel]
        base = math.floor(centre)
        idx, w = [], []
        for j in range(base - support + 1, base + support + 1):
            idx.append(min(max(j, 0), n_in - 1))
            w.append(fn(centre - j))
        rows.append((idx, w))

    width = max(len(r[0]) for r in rows)
    idx = np.zeros((n_out, width), dtype=np.int64)
    wts = np.zeros((n_out, width), dtype=np.float64)
    for d, (i, w) in enumerate(rows):
        idx[d, :len(i)] = i
        wts[d, :len(w)] = w
    wts /= wts.sum(axis=1, keepdims=True)
    return idx, wts


def _round_u8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def _resample_plane(plane: np.ndarray, out_w: int, out_h: int, kernel: str) -> np.ndarray:
    h, w = plane.shape
    src = plane.astype(np.float64)
    ix, wx = axis_weights(w, out_w, kernel)
    iy, wy = axis_weights(h, out_h, kernel)
    tmp = kernels.resample_axis(src, ix, wx)
    out = kernels.resample_axis(np.ascontiguousarray(tmp.T), iy, wy)
    return _round_u8(out.T)


def resample(img: Raster, out_w: int, out_h: int, kernel: str = "bicubic") -> Raster:
    """Resize ``img`` to ``out_w`` x ``out_h``.

    ``box`` averages the source footprint and is only accepted when neither
    axis grows. The interpolating kernels keep their unit support when
    shrinking (no anti-alias widening).
    """
    _check_kernel(kernel)
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be positive, got {out_w}x{out_h}")
    if kernel == "box" and (out_w > img.width or out_h > img.height):
        raise InvalidKernel("box filter only shrinks; use an interpolating kernel to enlarge")
    px = img.pixels
    if px.ndim == 2:
        return Raster(_resample_plane(px, out_w, out_h, kernel))
    planes = [_resample_plane(px[:, :, c], out_w, out_h, kernel) for c in range(3)]
    return Raster(np.stack(planes, axis=2))


def upscale(img: Raster, scale: int, kernel: str = "bicubic") -> Raster:
    _check_kernel(kernel)
    if kernel == "box":
        raise InvalidKernel("box is a reduction filter and cannot upscale")
    if int(scale) != scale or scale < 1:
        raise ValueError(f"scale must be a positive integer, got {scale}")
    return resample(img, img.width * scale, img.height * scale, kernel)


def downscale_half(img: Raster) -> Raster:
    """Halve both dimensions with a 2x2 box mean, dropping any odd trailing row/column."""
    if img.width < 2 or img.height < 2:
        raise ImageTooSmall(f"need at least 2x2 to halve, got {img.width}x{img.height}")
    h2, w2 = img.height // 2, img.width // 2
    px = img.pixels[: 2 * h2, : 2 * w2].astype(np.int64)
    blocks = px[0::2, 0::2] + px[0::2, 1::2] + px[1::2, 0::2] + px[1::2, 1::2]
    return Raster(((blocks + 2) // 4).astype(np.uint8))
