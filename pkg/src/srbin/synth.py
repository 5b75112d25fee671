"""Deterministic synthetic documents for desk-scale runs.

Random numbers come from splitmix64. Because splitmix64 is a counter-based
generator, draw ``k`` (0-based) of a stream seeded with ``s`` is
``mix(s + (k + 1) * GAMMA)``, which lets the noise block be generated in one
vectorised step. Draw order for one document:

1. For each stroke: one draw picks the shape (even = rectangle, odd = line).
   A rectangle then takes x, y, width, height (4 draws); a line takes x0, y0,
   x1, y1, thickness (5 draws). Each value is ``draw % range``.
2. When ``noise_sigma > 0``: ``12 * w * h`` draws in row-major pixel order,
   12 per pixel; each becomes a uniform on [0, 1) from its top 53 bits and the
   12 are summed minus 6, approximating a unit Gaussian.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from srbin.errors import ImageTooSmall
from srbin.fileio import save_image, write_atomic
from srbin.protocol import Manifest, ManifestEntry
from srbin.raster import BinaryMask, Raster, raster_from_mask

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

DEFAULT_STROKES = 60


def splitmix64_mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return splitmix64_mix(self.state)

    def take(self, n: int) -> np.ndarray:
        """The next ``n`` outputs as a uint64 array, identical to ``n`` calls of :meth:`next`."""
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * GAMMA) & MASK64
        return z


def _draw_strokes(rng: SplitMix64, w: int, h: int, count: int) -> np.ndarray:
    fg = np.zeros((h, w), dtype=bool)
    for _ in range(count):
        if rng.next() % 2 == 0:
            x = rng.next() % w
            y = rng.next() % h
            rw = 2 + rng.next() % max(1, w // 8)
            rh = 2 + rng.next() % max(1, h // 16)
            fg[y:y + rh, x:x + rw] = True
        else:
            x0, y0 = rng.next() % w, rng.next() % h
            x1, y1 = rng.next() % w, rng.next() % h
            thick = 1 + rng.next() % 3
            n = max(abs(x1 - x0), abs(y1 - y0), 1)
            t = np.arange(n + 1)
            xs = x0 + np.floor(t * (x1 - x0) / n + 0.5).astype(np.int64)
            ys = y0 + np.floor(t * (y1 - y0) / n + 0.5).astype(np.int64)
            for dy in range(thick):
                for dx in range(thick):
                    yy = np.clip(ys + dy - thick // 2, 0, h - 1)
                    xx = np.clip(xs + dx - thick // 2, 0, w - 1)
                    fg[yy, xx] = True
    return fg


def _box_blur3(values: np.ndarray) -> np.ndarray:
    h, w = values.shape
    padded = np.pad(values, 1, mode="edge")
    acc = np.zeros_like(values)
    for dy in range(3):
        for dx in range(3):
            acc += padded[dy:dy + h, dx:dx + w]
    return acc / 9.0


def synthesize_document(
    seed: int,
    w: int,
    h: int,
    noise_sigma: float = 0.0,
    stroke_count: int = DEFAULT_STROKES,
    blur: bool = True,
) -> tuple[Raster, BinaryMask]:
    """Return ``(input, gt)`` for one synthetic page: dark strokes on white, noised and blurred."""
    if w < 64 or h < 64:
        raise ImageTooSmall(f"synthetic documents must be at least 64x64, got {w}x{h}")
    rng = SplitMix64(seed)
    gt = BinaryMask(_draw_strokes(rng, w, h, stroke_count))
    values = raster_from_mask(gt).pixels.astype(np.float64)
    if noise_sigma > 0:
        draws = rng.take(12 * w * h).reshape(h, w, 12)
        uniforms = (draws >> np.uint64(11)).astype(np.float64) * 2.0**-53
        values = values + noise_sigma * (uniforms.sum(axis=2) - 6.0)
    if blur:
        values = _box_blur3(values)
    values = np.clip(np.floor(values + 0.5), 0, 255)
    return Raster(values.astype(np.uint8)), gt


def write_corpus(
    out_dir,
    seed: int,
    count: int,
    w: int,
    h: int,
    noise_sigma: float,
    stroke_count: int = DEFAULT_STROKES,
) -> Manifest:
    """Write ``count`` documents (document ``i`` uses seed ``seed + i``) plus ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(count):
        stem = f"doc_{i:03d}"
        image, gt = synthesize_document(seed + i, w, h, noise_sigma, stroke_count)
        save_image(image, out / f"{stem}.png")
        save_image(raster_from_mask(gt), out / f"{stem}_GT.png")
        entries.append(ManifestEntry(stem, f"{stem}.png", f"{stem}_GT.png"))
    manifest = Manifest(f"synthetic-seed{seed}", tuple(entries))
    write_atomic(out / "manifest.json", manifest.to_json().encode())
    return manifest
