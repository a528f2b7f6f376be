import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from contour_mend.preprocess import (
    binarize, histogram, median_filter3, spread_midpoint, threshold,
)
from contour_mend.raster import BinaryImage, GrayImage


def brute_median3(a):
    """Per-pixel median of the zero-padded 3x3 window."""
    p = np.pad(a, 1)
    out = np.zeros_like(a)
    for r in range(a.shape[0]):
        for c in range(a.shape[1]):
            out[r, c] = sorted(p[r:r + 3, c:c + 3].ravel())[4]
    return out


def test_histogram_examples():
    h = histogram(GrayImage([[0, 0], [255, 255]]))
    assert h[0] == 2 and h[255] == 2 and h.sum() == 4
    assert histogram(GrayImage(np.full((3, 3), 7)))[7] == 9


def test_midpoint_examples():
    bins = np.zeros(256, int)
    bins[[0, 255]] = 1
    assert spread_midpoint(bins).midpoint == 127
    bins = np.zeros(256, int)
    bins[231:256] = 5
    rep = spread_midpoint(bins)
    assert (rep.low, rep.high, rep.midpoint) == (231, 255, 243)
    one = np.zeros(256, int)
    one[40] = 3
    assert spread_midpoint(one).midpoint == 40


def test_midpoint_empty_histogram():
    with pytest.raises(ValueError):
        spread_midpoint(np.zeros(256, int))


def test_threshold_boundary():
    img = GrayImage([[244, 243, 0]])
    assert threshold(img, 243).data.tolist() == [[0, 1, 1]]


def test_all_bright_is_empty():
    assert threshold(GrayImage(np.full((4, 4), 250)), 243).count() == 0


def test_threshold_range_checked():
    with pytest.raises(ValueError):
        threshold(GrayImage([[0]]), 256)


def test_isolated_speck_removed():
    a = np.zeros((5, 5), np.uint8)
    a[2, 2] = 1
    assert median_filter3(BinaryImage(a)).count() == 0


def test_solid_block_center_survives():
    a = np.zeros((5, 5), np.uint8)
    a[1:4, 1:4] = 1
    out = median_filter3(BinaryImage(a)).data
    assert out[2, 2] == 1
    assert np.array_equal(out, brute_median3(a))


@pytest.mark.parametrize("v", [0, 1])
def test_constant_unchanged_away_from_border(v):
    a = np.full((6, 6), v, np.uint8)
    out = median_filter3(BinaryImage(a)).data
    assert (out[1:-1, 1:-1] == v).all()


bin_arrays = arrays(np.uint8, st.tuples(st.integers(1, 10), st.integers(1, 10)),
                    elements=st.integers(0, 1))


@settings(max_examples=60)
@given(bin_arrays)
def test_median_matches_brute_force(a):
    assert np.array_equal(median_filter3(BinaryImage(a)).data, brute_median3(a))


@settings(max_examples=60)
@given(bin_arrays)
def test_median_keeps_uniform_neighbourhoods(a):
    out = median_filter3(BinaryImage(a)).data
    p = np.pad(a, 1)
    for r in range(a.shape[0]):
        for c in range(a.shape[1]):
            win = p[r:r + 3, c:c + 3]
            if (win == a[r, c]).all():
                assert out[r, c] == a[r, c]


@settings(max_examples=40)
@given(bin_arrays)
def test_median_idempotent_when_stable(a):
    once = median_filter3(BinaryImage(a))
    twice = median_filter3(once)
    if once == BinaryImage(a):
        assert twice == once


@settings(max_examples=60)
@given(arrays(np.uint8, (6, 6)), st.integers(0, 255), st.integers(0, 255))
def test_threshold_monotone(a, m1, m2):
    lo, hi = sorted((m1, m2))
    img = GrayImage(a)
    assert set(threshold(img, 255).data.ravel()) == {1}
    assert np.all(threshold(img, hi).data >= threshold(img, lo).data)


def test_binarize_auto_threshold():
    a = np.full((10, 10), 240)
    a[4:7, :] = 30
    out, m = binarize(GrayImage(a))
    assert m == 135
    assert out.data[5].all() and not out.data[0].any()
