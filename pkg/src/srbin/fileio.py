"""Image file I/O.

PNG goes through Pillow after the header has been vetted here; binary PGM (P5)
and PPM (P6) are parsed directly. Only 8-bit data is accepted: 16-bit sources
and alpha-bearing PNGs are refused instead of being silently converted.
"""
from __future__ import annotations

import io
import os
import re
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from srbin.errors import CorruptImage, UnsupportedFormat
from srbin.raster import Raster

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
SUPPORTED_SUFFIXES = (".png", ".pgm", ".ppm", ".pnm")

_CONVERT_HINT = "supported formats are 8-bit PNG, PGM (P5) and PPM (P6); convert TIFF/BMP sources first"


def load_image(path) -> Raster:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    data = path.read_bytes()
    if data.startswith(PNG_SIGNATURE):
        return _decode_png(data, path)
    if data[:2] in (b"P5", b"P6"):
        return _decode_pnm(data, path)
    if data[:4] in (b"II*\x00", b"MM\x00*"):
        raise UnsupportedFormat(f"{path}: TIFF is not supported; {_CONVERT_HINT}")
    if data[:2] == b"BM":
        raise UnsupportedFormat(f"{path}: BMP is not supported; {_CONVERT_HINT}")
    raise UnsupportedFormat(f"{path}: unrecognised file signature; {_CONVERT_HINT}")


def _decode_png(data: bytes, path: Path) -> Raster:
    if len(data) < 33 or data[12:16] != b"IHDR":
        raise CorruptImage(f"{path}: PNG header is truncated")
    bit_depth, color_type = data[24], data[25]
    if bit_depth == 16:
        raise UnsupportedFormat(f"{path}: 16-bit PNG is not supported; {_CONVERT_HINT}")
    if color_type in (4, 6):
        raise UnsupportedFormat(f"{path}: PNG with an alpha channel is not supported")
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            if "transparency" in im.info:
                raise UnsupportedFormat(f"{path}: PNG with transparency is not supported")
            if im.mode == "1":
                im = im.convert("L")
            elif im.mode == "P":
                im = im.convert("RGB")
            if im.mode not in ("L", "RGB"):
                raise UnsupportedFormat(f"{path}: PNG mode {im.mode} is not supported")
            arr = np.asarray(im, dtype=np.uint8)
    except UnsupportedFormat:
        raise
    except (OSError, SyntaxError, ValueError, EOFError) as exc:
        raise CorruptImage(f"{path}: {exc}") from exc
    if color_type == 0 and bit_depth < 8:
        # Pillow leaves 1/2/4-bit gray levels unscaled
        arr = (arr.astype(np.int64) * 255 // ((1 << bit_depth) - 1)).astype(np.uint8)
    return Raster(arr)


_PNM_HEADER = re.compile(rb"\A(P[56])(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)\s")


def _decode_pnm(data: bytes, path: Path) -> Raster:
    m = _PNM_HEADER.match(data)
    if m is None:
        raise CorruptImage(f"{path}: malformed PNM header")
    magic, width, height, maxval = m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4))
    channels = 1 if magic == b"P5" else 3
    suffix = path.suffix.lower()
    if suffix == ".pgm" and channels != 1:
        raise UnsupportedFormat(f"{path}: PGM must be single-channel (P5); 3-channel data belongs in a .ppm")
    if suffix == ".ppm" and channels != 3:
        raise UnsupportedFormat(f"{path}: PPM must be RGB (P6); single-channel data belongs in a .pgm")
    if maxval > 255:
        raise UnsupportedFormat(f"{path}: maxval {maxval} means 16-bit samples, which are not supported")
    if maxval != 255:
        raise UnsupportedFormat(f"{path}: only maxval 255 is supported, got {maxval}")
    if width < 1 or height < 1:
        raise CorruptImage(f"{path}: invalid dimensions {width}x{height}")
    need = width * height * channels
    body = data[m.end():m.end() + need]
    if len(body) < need:
        raise CorruptImage(f"{path}: expected {need} pixel bytes, found {len(body)}")
    return Raster.from_samples(width, height, channels, np.frombuffer(body, dtype=np.uint8))


def encode_image(img: Raster, suffix: str) -> bytes:
    suffix = suffix.lower()
    if suffix == ".png":
        buf = io.BytesIO()
        Image.fromarray(img.pixels).save(buf, format="PNG")
        return buf.getvalue()
    if suffix == ".pgm" and img.channels != 1:
        raise UnsupportedFormat("PGM holds single-channel images; save 3-channel rasters as .ppm or .png")
    if suffix == ".ppm" and img.channels != 3:
        raise UnsupportedFormat("PPM holds RGB images; save 1-channel rasters as .pgm or .png")
    if suffix in (".pgm", ".ppm", ".pnm"):
        magic = "P5" if img.channels == 1 else "P6"
        return f"{magic}\n{img.width} {img.height}\n255\n".encode("ascii") + img.pixels.tobytes()
    raise UnsupportedFormat(f"cannot write '{suffix}'; {_CONVERT_HINT}")


def write_atomic(path, payload: bytes) -> None:
    """Write ``payload`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def save_image(img: Raster, path) -> None:
    path = Path(path)
    write_atomic(path, encode_image(img, path.suffix))

