"""Inner loops shared by resampling, local thresholding and SSIM.

Each kernel exists twice: a loop version compiled with numba and a vectorised
numpy version. Both accumulate in the same order, so they agree bit for bit;
``tests/test_kernels.py`` holds them to that. The module-level names pick one
according to :data:`srbin._accel.USE_NUMBA`.
"""
import numpy as np

from srbin._accel import USE_NUMBA, njit


@njit
def _resample_axis_nb(src, idx, wts):
    rows = src.shape[0]
    n_out, taps = idx.shape
    out = np.empty((rows, n_out))
    for r in range(rows):
        for j in range(n_out):
            acc = 0.0
            for t in range(taps):
                acc += src[r, idx[j, t]] * wts[j, t]
            out[r, j] = acc
    return out


def _resample_axis_np(src, idx, wts):
    out = np.zeros((src.shape[0], idx.shape[0]))
    for t in range(idx.shape[1]):
        out += src[:, idx[:, t]] * wts[:, t]
    return out


@njit
def _window_stats_nb(sums, sq_sums, radius):
    h = sums.shape[0] - 1
    w = sums.shape[1] - 1
    mean = np.empty((h, w))
    std = np.empty((h, w))
    for y in range(h):
        y0 = max(y - radius, 0)
        y1 = min(y + radius + 1, h)
        for x in range(w):
            x0 = max(x - radius, 0)
            x1 = min(x + radius + 1, w)
            n = (y1 - y0) * (x1 - x0)
            s = sums[y1, x1] - sums[y0, x1] - sums[y1, x0] + sums[y0, x0]
            s2 = sq_sums[y1, x1] - sq_sums[y0, x1] - sq_sums[y1, x0] + sq_sums[y0, x0]
            m = s / n
            var = s2 / n - m * m
            mean[y, x] = m
            std[y, x] = np.sqrt(max(var, 0.0))
    return mean, std


def _window_stats_np(sums, sq_sums, radius):
    h = sums.shape[0] - 1
    w = sums.shape[1] - 1
    ys = np.arange(h)
    xs = np.arange(w)
    y0 = np.maximum(ys - radius, 0)[:, None]
    y1 = np.minimum(ys + radius + 1, h)[:, None]
    x0 = np.maximum(xs - radius, 0)[None, :]
    x1 = np.minimum(xs + radius + 1, w)[None, :]
    n = (y1 - y0) * (x1 - x0)
    s = sums[y1, x1] - sums[y0, x1] - sums[y1, x0] + sums[y0, x0]
    s2 = sq_sums[y1, x1] - sq_sums[y0, x1] - sq_sums[y1, x0] + sq_sums[y0, x0]
    m = s / n
    var = s2 / n - m * m
    return m, np.sqrt(np.maximum(var, 0.0))


@njit
def _filter_valid_nb(src, taps):
    k = taps.shape[0]
    h = src.shape[0]
    w = src.shape[1] - k + 1
    rows = np.empty((h, w))
    for r in range(h):
        for c in range(w):
            acc = 0.0
            for t in range(k):
                acc += taps[t] * src[r, c + t]
            rows[r, c] = acc
    oh = h - k + 1
    out = np.empty((oh, w))
    for r in range(oh):
        for c in range(w):
            acc = 0.0
            for t in range(k):
                acc += taps[t] * rows[r + t, c]
            out[r, c] = acc
    return out


def _filter_valid_np(src, taps):
    k = taps.shape[0]
    h, w = src.shape
    rows = np.zeros((h, w - k + 1))
    for t in range(k):
        rows += taps[t] * src[:, t:t + w - k + 1]
    out = np.zeros((h - k + 1, w - k + 1))
    for t in range(k):
        out += taps[t] * rows[t:t + h - k + 1, :]
    return out


def integral_images(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Zero-padded summed-area tables of ``values`` and ``values**2`` (exact int64)."""
    v = values.astype(np.int64)
    sums = np.zeros((v.shape[0] + 1, v.shape[1] + 1), dtype=np.int64)
    sq = np.zeros_like(sums)
    sums[1:, 1:] = v.cumsum(0).cumsum(1)
    sq[1:, 1:] = (v * v).cumsum(0).cumsum(1)
    return sums, sq


IMPLEMENTATIONS = {
    "numba": {
        "resample_axis": _resample_axis_nb,
        "window_stats": _window_stats_nb,
        "filter_valid": _filter_valid_nb,
    },
    "numpy": {
        "resample_axis": _resample_axis_np,
        "window_stats": _window_stats_np,
        "filter_valid": _filter_valid_np,
    },
}

BACKEND = "numba" if USE_NUMBA else "numpy"

resample_axis = IMPLEMENTATIONS[BACKEND]["resample_axis"]
window_stats = IMPLEMENTATIONS[BACKEND]["window_stats"]
filter_valid = IMPLEMENTATIONS[BACKEND]["filter_valid"]
