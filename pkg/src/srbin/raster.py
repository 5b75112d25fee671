"""Pixel containers and the conversions between them.

A :class:`Raster` wraps an 8-bit ``(height, width)`` or ``(height, width, 3)``
array; a :class:`BinaryMask` wraps a boolean ``(height, width)`` array where
``True`` marks a text pixel. Both are immutable: the wrapped arrays are copied
on construction and flagged read-only.
"""
from __future__ import annotations

import numpy as np

from srbin.errors import ChannelsMismatch, SrBinError

GT_THRESHOLD = 128


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True, order="C")
    arr.setflags(write=False)
    return arr


class Raster:
    __slots__ = ("_pixels",)

    def __init__(self, pixels) -> None:
        arr = np.asarray(pixels)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
            raise SrBinError(f"raster must be HxW or HxWx3, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise SrBinError(f"raster dimensions must be positive, got {arr.shape[1]}x{arr.shape[0]}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise SrBinError("raster samples must lie in [0, 255]")
            if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.floor(arr)):
                raise SrBinError("raster samples must be integers")
            arr = arr.astype(np.uint8)
        self._pixels = _frozen(arr)

    @classmethod
    def from_samples(cls, width: int, height: int, channels: int, samples) -> Raster:
        flat = np.asarray(samples)
        if channels not in (1, 3):
            raise SrBinError(f"channels must be 1 or 3, got {channels}")
        if flat.size != width * height * channels:
            raise SrBinError(
                f"expected {width * height * channels} samples for {width}x{height}x{channels}, "
                f"got {flat.size}"
            )
        shape = (height, width) if channels == 1 else (height, width, 3)
        return cls(flat.reshape(shape))

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def channels(self) -> int:
        return 1 if self._pixels.ndim == 2 else 3

    @property
    def size(self) -> tuple[int, int]:
        return self.width, self.height

    @property
    def samples(self) -> np.ndarray:
        """Row-major, channel-interleaved view of the samples."""
        return self._pixels.reshape(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Raster):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and bool(
            np.array_equal(self._pixels, other._pixels)
        )

    def __hash__(self) -> int:
        return hash((self._pixels.shape, self._pixels.tobytes()))

    def __repr__(self) -> str:
        return f"Raster({self.width}x{self.height}x{self.channels})"


class BinaryMask:
    __slots__ = ("_fg",)

    def __init__(self, foreground) -> None:
        arr = np.asarray(foreground)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise SrBinError(f"mask must be a non-empty HxW array, got shape {arr.shape}")
        self._fg = _frozen(arr.astype(bool))

    @classmethod
    def from_flags(cls, width: int, height: int, flags) -> BinaryMask:
        flat = np.asarray(flags, dtype=bool)
        if flat.size != width * height:
            raise SrBinError(f"expected {width * height} flags for {width}x{height}, got {flat.size}")
        return cls(flat.reshape(height, width))

    @property
    def foreground(self) -> np.ndarray:
        return self._fg

    @property
    def width(self) -> int:
        return self._fg.shape[1]

    @property
    def height(self) -> int:
        return self._fg.shape[0]

    @property
    def size(self) -> tuple[int, int]:
        return self.width, self.height

    def count(self) -> int:
        return int(self._fg.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self._fg.shape == other._fg.shape and bool(np.array_equal(self._fg, other._fg))

    def __hash__(self) -> int:
        return hash((self._fg.shape, self._fg.tobytes()))

    def __repr__(self) -> str:
        return f"BinaryMask({self.width}x{self.height}, fg={self.count()})"


def to_grayscale(img: Raster) -> Raster:
    """BT.601 luma, rounded half up. Single-channel input is returned as is."""
    if img.channels == 1:
        return img
    # integer weights out of 1000 make the rounding exact: 0.299/0.587/0.114
    rgb = img.pixels.astype(np.int64)
    acc = 299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]
    return Raster((acc + 500) // 1000)


def mask_from_raster(img: Raster, threshold: int = GT_THRESHOLD) -> BinaryMask:
    if img.channels != 1:
        raise ChannelsMismatch(f"mask decoding needs a 1-channel raster, got {img.channels} channels")
    return BinaryMask(img.pixels < threshold)


def raster_from_mask(mask: BinaryMask) -> Raster:
    return Raster(np.where(mask.foreground, 0, 255).astype(np.uint8))
