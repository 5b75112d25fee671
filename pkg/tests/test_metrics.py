import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import f_measure_direct, psnr_direct, ssim_direct
from srbin.errors import ImageTooSmall, SizeMismatch
from srbin.metrics import C1, C2, f_measure, metric_suite, psnr, ssim
from srbin.raster import BinaryMask, Raster, raster_from_mask


def _r(px):
    return Raster(np.asarray(px, dtype=np.uint8))


def test_constants():
    assert C1 == pytest.approx(6.5025, abs=1e-12)
    assert C2 == pytest.approx(58.5225, abs=1e-12)


def test_psnr_identical():
    a = _r(np.full((4, 4), 9))
    assert psnr(a, a) == (0.0, None)


def test_psnr_black_white():
    res = psnr(_r(np.zeros((3, 3))), _r(np.full((3, 3), 255)))
    assert res.mse == 255.0**2
    assert res.psnr_db == 0.0


def test_psnr_one_pixel():
    a = np.zeros((4, 4))
    b = a.copy()
    b[2, 1] = 255
    res = psnr(_r(a), _r(b))
    assert res.mse == 255.0**2 / 16
    assert abs(res.psnr_db - 10 * math.log10(16)) <= 1e-9
    assert res.psnr_db == pytest.approx(12.0412, abs=5e-5)


def test_psnr_size_mismatch():
    with pytest.raises(SizeMismatch, match="4x3 vs 3x4"):
        psnr(_r(np.zeros((3, 4))), _r(np.zeros((4, 3))))


def test_ssim_identical_is_exactly_one(rng):
    a = _r(rng.integers(0, 256, size=(20, 17)))
    assert ssim(a, a) == 1.0


def test_ssim_constant_black_white():
    got = ssim(_r(np.zeros((12, 12))), _r(np.full((12, 12), 255)))
    assert abs(got - 6.5025 / 65031.5025) <= 1e-12


def test_ssim_too_small():
    with pytest.raises(ImageTooSmall):
        ssim(_r(np.zeros((10, 20))), _r(np.zeros((10, 20))))


def test_ssim_matches_direct(rng):
    for _ in range(5):
        a = rng.integers(0, 256, size=(16, 16))
        b = np.clip(a + rng.integers(-60, 60, size=(16, 16)), 0, 255)
        assert math.isclose(ssim(_r(a), _r(b)), ssim_direct(a, b), rel_tol=1e-9)


@given(arrays(np.uint8, (12, 13)), arrays(np.uint8, (12, 13)))
def test_symmetry(a, b):
    ra, rb = _r(a), _r(b)
    assert abs(ssim(ra, rb) - ssim(rb, ra)) <= 1e-12
    pa, pb = psnr(ra, rb), psnr(rb, ra)
    assert pa.mse == pb.mse
    s = ssim(ra, rb)
    assert -1.0 <= s <= 1.0
    assert pa.psnr_db is None or pa.psnr_db >= 0


def test_f_measure_examples():
    gt = BinaryMask(np.array([[True, True, False, False]]))
    assert f_measure(gt, gt)[:3] == (1.0, 1.0, 1.0)
    res = f_measure(BinaryMask(np.ones((1, 4), bool)), gt)
    assert (res.precision, res.recall) == (0.5, 1.0)
    assert res.f_measure == pytest.approx(2 / 3, abs=1e-15)
    assert (res.tp, res.fp, res.fn, res.tn) == (2, 2, 0, 0)


def test_f_measure_empty_conventions():
    empty = BinaryMask(np.zeros((2, 2), bool))
    some = BinaryMask(np.eye(2, dtype=bool))
    assert f_measure(empty, empty).f_measure == 1.0
    assert f_measure(some, empty).f_measure == 0.0
    assert f_measure(empty, some).f_measure == 0.0


def test_f_measure_matches_direct(rng):
    for _ in range(20):
        p = rng.random((7, 9)) < rng.random()
        g = rng.random((7, 9)) < rng.random()
        res = f_measure(BinaryMask(p), BinaryMask(g))
        P, R, F, counts = f_measure_direct(p, g)
        assert (res.tp, res.fp, res.fn, res.tn) == counts
        assert res.precision == P and res.recall == R and res.f_measure == F


@given(arrays(bool, (6, 6)), arrays(bool, (6, 6)), st.randoms(use_true_random=False))
def test_f_measure_permutation_invariant(p, g, rnd):
    perm = list(range(36))
    rnd.shuffle(perm)
    pp = p.ravel()[perm].reshape(6, 6)
    gp = g.ravel()[perm].reshape(6, 6)
    assert f_measure(BinaryMask(p), BinaryMask(g)) == f_measure(BinaryMask(pp), BinaryMask(gp))


@given(arrays(bool, (5, 5)), st.integers(0, 24))
def test_psnr_monotone_in_disagreement(gt, start):
    pred = gt.copy()
    order = [(i + start) % 25 for i in range(25)]
    last_mse = -1.0
    for k in order:
        pred.ravel()[k] = ~gt.ravel()[k]
        res = psnr(raster_from_mask(BinaryMask(pred)), raster_from_mask(BinaryMask(gt)))
        assert res.mse > last_mse
        last_mse = res.mse


def test_metric_suite_identical():
    m = BinaryMask(np.eye(16, dtype=bool))
    rep = metric_suite(m, m)
    assert rep.psnr_db is None and rep.mse == 0.0
    assert rep.ssim == 1.0 and rep.f_measure == 1.0
    assert rep.tp + rep.fp + rep.fn + rep.tn == 256


def test_metric_suite_inverted():
    m = BinaryMask(np.indices((16, 16)).sum(0) % 3 == 0)
    inv = BinaryMask(~m.foreground)
    rep = metric_suite(inv, m)
    assert rep.psnr_db == 0.0 and rep.f_measure == 0.0 and rep.tp == 0


def test_metric_suite_composes_scalar_ops(rng):
    p = BinaryMask(rng.random((16, 14)) < 0.3)
    g = BinaryMask(rng.random((16, 14)) < 0.3)
    rep = metric_suite(p, g)
    rp, rg = raster_from_mask(p), raster_from_mask(g)
    assert (rep.mse, rep.psnr_db) == tuple(psnr(rp, rg))
    assert rep.ssim == ssim(rp, rg)


def test_metric_suite_small_masks_skip_ssim():
    m = BinaryMask(np.zeros((2, 2), bool))
    rep = metric_suite(m, m)
    assert rep.ssim is None and rep.f_measure == 1.0


def test_metric_report_dict_round_trip(rng):
    from srbin.metrics import MetricReport

    rep = metric_suite(BinaryMask(rng.random((12, 12)) < 0.5), BinaryMask(rng.random((12, 12)) < 0.5))
    assert MetricReport.from_dict(rep.to_dict()) == rep
