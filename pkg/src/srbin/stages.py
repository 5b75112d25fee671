"""The two pipeline stages: super-resolution, then binarization.

Each stage has classical built-ins plus an adapter that picks up files written
by an external model (one ``<stem>.png`` per image in a flat directory).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from srbin import kernels
from srbin.errors import (
    ConfigInvalid,
    EmptyHistogram,
    EvenWindow,
    ExternalOutputMissing,
    ExternalSizeMismatch,
)
from srbin.fileio import load_image
from srbin.raster import BinaryMask, Raster, mask_from_raster, to_grayscale
from srbin.resample import UPSCALE_KERNELS, upscale

SR_VARIANTS = ("identity", "classical", "external")
SEG_METHODS = ("otsu", "niblack", "sauvola", "external")

DEFAULT_WINDOW = 25
DEFAULT_K = {"niblack": -0.2, "sauvola": 0.2}
DEFAULT_R = 128.0


@dataclass(frozen=True)
class SrSpec:
    variant: str = "identity"
    kernel: str | None = None
    scale: int = 1
    dir: str | None = None

    def __post_init__(self):
        if self.variant not in SR_VARIANTS:
            raise ConfigInvalid(f"unknown SR variant {self.variant!r}")
        if int(self.scale) != self.scale or self.scale < 1:
            raise ConfigInvalid(f"SR scale must be a positive integer, got {self.scale}")
        if self.variant == "identity" and self.scale != 1:
            raise ConfigInvalid("identity SR has scale 1")
        if self.variant == "classical" and self.kernel not in UPSCALE_KERNELS:
            raise ConfigInvalid(f"classical SR needs a kernel in {UPSCALE_KERNELS}, got {self.kernel!r}")
        if self.variant == "external":
            if self.dir is None or not Path(self.dir).is_dir():
                raise ConfigInvalid(f"external SR directory does not exist: {self.dir}")

    @classmethod
    def identity(cls) -> SrSpec:
        return cls()

    @classmethod
    def classical(cls, kernel: str = "bicubic", scale: int = 2) -> SrSpec:
        return cls("classical", kernel=kernel, scale=scale)

    @classmethod
    def external(cls, dir, scale: int = 2) -> SrSpec:
        return cls("external", scale=scale, dir=str(dir))

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> SrSpec:
        return cls(d["variant"], d.get("kernel"), d.get("scale", 1), d.get("dir"))


@dataclass(frozen=True)
class SegSpec:
    method: str = "sauvola"
    window: int | None = None
    k: float | None = None
    r: float | None = None
    dir: str | None = None

    def __post_init__(self):
        if self.method not in SEG_METHODS:
            raise ConfigInvalid(f"unknown segmentation method {self.method!r}")
        if self.method in ("niblack", "sauvola"):
            # fill defaults so every report echoes the effective parameters
            if self.window is None:
                object.__setattr__(self, "window", DEFAULT_WINDOW)
            if self.k is None:
                object.__setattr__(self, "k", DEFAULT_K[self.method])
            if self.method == "sauvola" and self.r is None:
                object.__setattr__(self, "r", DEFAULT_R)
            if self.window % 2 == 0:
                raise EvenWindow(f"window must be odd, got {self.window}")
            if self.window < 3:
                raise ConfigInvalid(f"window must be at least 3, got {self.window}")
            if self.r is not None and self.r <= 0:
                raise ConfigInvalid(f"R must be positive, got {self.r}")
        if self.method == "external":
            if self.dir is None or not Path(self.dir).is_dir():
                raise ConfigInvalid(f"external segmentation directory does not exist: {self.dir}")

    @classmethod
    def otsu(cls) -> SegSpec:
        return cls("otsu")

    @classmethod
    def niblack(cls, window: int = DEFAULT_WINDOW, k: float = DEFAULT_K["niblack"]) -> SegSpec:
        return cls("niblack", window=window, k=k)

    @classmethod
    def sauvola(cls, window: int = DEFAULT_WINDOW, k: float = DEFAULT_K["sauvola"], r: float = DEFAULT_R) -> SegSpec:
        return cls("sauvola", window=window, k=k, r=r)

    @classmethod
    def external(cls, dir) -> SegSpec:
        return cls("external", dir=str(dir))

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> SegSpec:
        return cls(d["method"], d.get("window"), d.get("k"), d.get("r"), d.get("dir"))


def load_external_output(dir, stem: str, expected_w: int, expected_h: int) -> Raster:
    path = Path(dir) / f"{stem}.png"
    if not path.is_file():
        raise ExternalOutputMissing(f"external output not found: {path.resolve()}")
    img = load_image(path)
    if img.size != (expected_w, expected_h):
        raise ExternalSizeMismatch(
            f"{path}: expected {expected_w}x{expected_h}, got {img.width}x{img.height}"
        )
    return to_grayscale(img)


def apply_sr(img: Raster, spec: SrSpec, stem: str) -> Raster:
    want = (img.width * spec.scale, img.height * spec.scale)
    if spec.variant == "identity":
        out = img
    elif spec.variant == "classical":
        out = upscale(img, spec.scale, spec.kernel)
    else:
        out = load_external_output(spec.dir, stem, *want)
    if out.size != want:
        raise ExternalSizeMismatch(f"SR stage produced {out.width}x{out.height}, expected {want[0]}x{want[1]}")
    return out


def otsu_threshold(hist) -> int:
    """Threshold maximising between-class variance; pixels ``<= t`` are foreground.

    Scores are compared exactly in integer arithmetic, so ties resolve to the
    smallest ``t`` deterministically. ``w0*w1*(mu0-mu1)**2`` is proportional to
    ``(S0*n1 - S1*n0)**2 / (n0*n1)`` with counts ``n`` and value sums ``S``.
    """
    counts = [int(c) for c in hist]
    if len(counts) != 256:
        raise ValueError(f"histogram needs 256 bins, got {len(counts)}")
    if any(c < 0 for c in counts):
        raise ValueError("histogram counts must be non-negative")
    total = sum(counts)
    if total == 0:
        raise EmptyHistogram("histogram has no samples")
    total_sum = sum(i * c for i, c in enumerate(counts))

    best_t, best_num, best_den = 0, 0, 1
    n0 = s0 = 0
    for t in range(256):
        n0 += counts[t]
        s0 += t * counts[t]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        num = (s0 * n1 - (total_sum - s0) * n0) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def local_threshold(img: Raster, method: str, window: int, k: float, r: float = DEFAULT_R) -> BinaryMask:
    """Niblack or Sauvola thresholding with windows clipped at the image border."""
    if img.channels != 1:
        img = to_grayscale(img)
    if window % 2 == 0:
        raise EvenWindow(f"window must be odd, got {window}")
    if window < 1:
        raise ValueError(f"window must be positive, got {window}")
    values = img.pixels
    sums, sq = kernels.integral_images(values)
    mean, std = kernels.window_stats(sums, sq, window // 2)
    if method == "niblack":
        thresh = mean + k * std
    elif method == "sauvola":
        thresh = mean * (1.0 + k * (std / r - 1.0))
    else:
        raise ValueError(f"unknown local method {method!r}")
    return BinaryMask(values < thresh)


def binarize(img: Raster, spec: SegSpec, stem: str) -> BinaryMask:
    gray = to_grayscale(img)
    if spec.method == "otsu":
        hist = np.bincount(gray.pixels.reshape(-1), minlength=256)
        return BinaryMask(gray.pixels <= otsu_threshold(hist))
    if spec.method in ("niblack", "sauvola"):
        return local_threshold(gray, spec.method, spec.window, spec.k, spec.r if spec.r is not None else DEFAULT_R)
    ext = load_external_output(spec.dir, stem, gray.width, gray.height)
    return mask_from_raster(ext)
