import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from srbin.errors import ChannelsMismatch, SrBinError
from srbin.raster import BinaryMask, Raster, mask_from_raster, raster_from_mask, to_grayscale


def test_samples_are_row_major_interleaved():
    img = Raster.from_samples(2, 1, 3, [1, 2, 3, 4, 5, 6])
    assert img.pixels.shape == (1, 2, 3)
    assert img.pixels[0, 1].tolist() == [4, 5, 6]
    assert img.samples.tolist() == [1, 2, 3, 4, 5, 6]


@pytest.mark.parametrize(
    "args",
    [(2, 2, 1, [0, 1, 2]), (1, 1, 2, [0, 0]), (1, 1, 1, [256])],
)
def test_invalid_rasters_rejected(args):
    with pytest.raises(SrBinError):
        Raster.from_samples(*args)


def test_raster_is_immutable():
    img = Raster(np.zeros((2, 2), np.uint8))
    with pytest.raises(ValueError):
        img.pixels[0, 0] = 1


@pytest.mark.parametrize(
    "rgb, luma",
    [((255, 255, 255), 255), ((255, 0, 0), 76), ((0, 0, 255), 29), ((0, 255, 0), 150), ((0, 0, 0), 0)],
)
def test_grayscale_bt601(rgb, luma):
    img = Raster(np.array([[rgb]], dtype=np.uint8))
    out = to_grayscale(img)
    assert out.channels == 1
    assert out.samples.tolist() == [luma]


def test_grayscale_round_half_up():
    r, g = np.meshgrid(np.arange(256), np.arange(256))
    rgb = np.stack([r, g, np.full_like(r, 9)], axis=2).astype(np.uint8)
    got = to_grayscale(Raster(rgb)).pixels
    for rr, gg in [(0, 0), (1, 2), (128, 77), (255, 254), (37, 200)]:
        want = math.floor(Fraction(299 * rr + 587 * gg + 114 * 9, 1000) + Fraction(1, 2))
        assert got[gg, rr] == want


def test_grayscale_identity_on_single_channel():
    img = Raster(np.arange(12, dtype=np.uint8).reshape(3, 4))
    assert to_grayscale(img) is img
    assert to_grayscale(to_grayscale(img)) == img


def test_mask_polarity_and_boundary():
    img = Raster.from_samples(4, 1, 1, [0, 255, 127, 128])
    assert mask_from_raster(img).foreground.ravel().tolist() == [True, False, True, False]
    assert mask_from_raster(Raster(np.full((3, 3), 255, np.uint8))).count() == 0


def test_mask_from_rgb_rejected():
    with pytest.raises(ChannelsMismatch):
        mask_from_raster(Raster(np.zeros((2, 2, 3), np.uint8)))


def test_raster_from_mask():
    m = BinaryMask.from_flags(2, 1, [True, False])
    assert raster_from_mask(m).samples.tolist() == [0, 255]
    assert np.all(raster_from_mask(BinaryMask(np.zeros((3, 2), bool))).pixels == 255)


@given(arrays(bool, st.tuples(st.integers(1, 12), st.integers(1, 12))))
def test_mask_round_trip(flags):
    m = BinaryMask(flags)
    assert mask_from_raster(raster_from_mask(m), 128) == m
