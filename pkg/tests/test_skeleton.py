import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from contour_mend.raster import BinaryImage, PixelCoord
from contour_mend.skeleton import (
    NEIGHBOR_OFFSETS, count_components, crossing_number, detect_endpoints,
    label_components, neighbor_sum, remove_crossed_points, trace_tail,
    zhang_suen_thin,
)


def ring_values(a, r, c):
    p = np.pad(a, 1)
    return [int(p[r + 1 + dr, c + 1 + dc]) for dr, dc in NEIGHBOR_OFFSETS]


def scalar_transitions(vals):
    return sum(1 for i in range(8) if vals[i] == 0 and vals[(i + 1) % 8] == 1)


def scalar_thin(a):
    """Pixel-by-pixel thinning reference; each sub-pass reads a frozen copy."""
    a = a.copy()
    h, w = a.shape
    while True:
        changed = False
        for step in (0, 1):
            frozen = a.copy()
            for r in range(h):
                for c in range(w):
                    if not frozen[r, c]:
                        continue
                    p2, p3, p4, p5, p6, p7, p8, p9 = ring_values(frozen, r, c)
                    b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9
                    t = scalar_transitions([p2, p3, p4, p5, p6, p7, p8, p9])
                    if step == 0:
                        ok = p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0
                    else:
                        ok = p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0
                    if 2 <= b <= 6 and t == 1 and ok:
                        a[r, c] = 0
                        changed = True
        if not changed:
            return a


def canvas(h=9, w=9):
    return np.zeros((h, w), np.uint8)


# thinning

def test_thin_line_is_fixed_point():
    a = canvas(5, 12)
    a[2, 1:11] = 1
    assert zhang_suen_thin(BinaryImage(a)) == BinaryImage(a)


def test_bar_thins_to_single_row():
    a = canvas(7, 14)
    a[2:5, 2:12] = 1
    out = zhang_suen_thin(BinaryImage(a)).data
    assert np.array_equal(out, scalar_thin(a))
    rows = np.nonzero(out.any(axis=1))[0]
    assert len(rows) == 1
    cols = np.nonzero(out[rows[0]])[0]
    assert np.array_equal(cols, np.arange(cols[0], cols[-1] + 1))
    # each end may lose at most two columns
    assert cols[0] - 2 <= 2 and 11 - cols[-1] <= 2


def test_thin_empty_image():
    assert zhang_suen_thin(BinaryImage(canvas())).count() == 0


sparse = arrays(np.uint8, st.tuples(st.integers(3, 14), st.integers(3, 14)),
                elements=st.integers(0, 1))


@settings(max_examples=60, deadline=None)
@given(sparse)
def test_thin_matches_scalar_reference(a):
    assert np.array_equal(zhang_suen_thin(BinaryImage(a)).data, scalar_thin(a))


@settings(max_examples=60, deadline=None)
@given(sparse)
def test_thin_subset_and_idempotent(a):
    once = zhang_suen_thin(BinaryImage(a))
    assert np.all(once.data <= a)
    assert zhang_suen_thin(once) == once


def test_thin_matches_reference_on_shapes(shapes):
    for img in shapes[:10]:
        assert np.array_equal(zhang_suen_thin(img).data, scalar_thin(img.data))


def test_thin_preserves_components_on_open_curves(shapes):
    for img in shapes[:14]:
        assert count_components(zhang_suen_thin(img)) == count_components(img)


# crossed points

def test_plus_centre_deleted():
    a = canvas(5, 5)
    a[2, :] = 1
    a[:, 2] = 1
    assert crossing_number(BinaryImage(a))[2, 2] == 4
    out, crossed = remove_crossed_points(BinaryImage(a))
    assert PixelCoord(2, 2) in crossed and out.data[2, 2] == 0


def test_t_centre_deleted():
    a = canvas(5, 5)
    a[1, :] = 1
    a[1:, 2] = 1
    assert crossing_number(BinaryImage(a))[1, 2] == 3
    out, crossed = remove_crossed_points(BinaryImage(a))
    assert crossed[0] == PixelCoord(1, 2) and out.data[1, 2] == 0
    # the stem's top pixel becomes a three-way split once the centre goes
    assert crossing_number(out)[out.data == 1].max() <= 2


def test_line_interior_kept():
    a = canvas(3, 7)
    a[1, 1:6] = 1
    assert crossing_number(BinaryImage(a))[1, 3] == 2
    out, crossed = remove_crossed_points(BinaryImage(a))
    assert crossed == [] and out == BinaryImage(a)


def test_crossing_number_matches_hand_enumeration():
    rng = np.random.default_rng(3)
    a = (rng.random((12, 12)) < 0.4).astype(np.uint8)
    cn = crossing_number(BinaryImage(a))
    for r in range(12):
        for c in range(12):
            assert cn[r, c] == scalar_transitions(ring_values(a, r, c))


def test_no_branch_points_after_removal(shapes):
    for img in shapes:
        out, _ = remove_crossed_points(zhang_suen_thin(img))
        cn = crossing_number(out)
        assert cn[out.data == 1].max(initial=0) <= 2


# endpoints

def test_isolated_pixel_not_endpoint():
    a = canvas()
    a[4, 4] = 1
    assert detect_endpoints(BinaryImage(a)) == []


def test_segment_has_two_endpoints():
    a = canvas()
    a[4, 2:7] = 1
    assert detect_endpoints(BinaryImage(a)) == [PixelCoord(4, 2), PixelCoord(4, 6)]


def test_border_pixels_not_scanned():
    a = canvas(5, 5)
    a[2, 0:3] = 1
    assert detect_endpoints(BinaryImage(a)) == [PixelCoord(2, 2)]


def test_n_polylines_give_2n_endpoints():
    a = canvas(20, 20)
    a[2, 2:9] = 1
    for i in range(6):
        a[5 + i, 12 + i] = 1
    a[12:18, 3] = 1
    a[17, 3:8] = 1
    pts = detect_endpoints(BinaryImage(a))
    assert len(pts) == 6
    s = neighbor_sum(BinaryImage(a))
    assert all(s[p] == 1 for p in pts)


def test_open_curve_corpus_endpoints(shapes):
    for img in shapes[:14]:
        skel, _ = remove_crossed_points(zhang_suen_thin(img))
        assert len(detect_endpoints(skel)) == 2


# labels

def test_labels_two_segments():
    a = canvas()
    a[1, 1:4] = 1
    a[6, 1:4] = 1
    lab = label_components(BinaryImage(a))
    assert set(np.unique(lab[a == 1])) == {0, 1}
    assert lab[1, 1] == 0 and lab[6, 1] == 1
    assert (lab[a == 0] == -1).all()


def test_labels_empty_and_l_shape():
    assert (label_components(BinaryImage(canvas())) == -1).all()
    a = canvas()
    a[1:6, 2] = 1
    a[6, 3:7] = 1
    assert set(np.unique(label_components(BinaryImage(a))[a == 1])) == {0}


# tails

def test_tail_straight():
    a = canvas(3, 12)
    a[1, 1:11] = 1
    tail = trace_tail(BinaryImage(a), PixelCoord(1, 1), 5)
    assert tail.pixels == [PixelCoord(1, c) for c in range(1, 6)]


def test_tail_early_stop():
    a = canvas(3, 8)
    a[1, 2:5] = 1
    assert len(trace_tail(BinaryImage(a), PixelCoord(1, 2), 5).pixels) == 3


def test_tail_staircase_alternates():
    a = canvas(10, 10)
    pts = [(2, 1), (2, 2), (2, 3), (3, 3), (3, 4), (4, 4), (4, 5), (5, 5)]
    for p in pts:
        a[p] = 1
    tail = trace_tail(BinaryImage(a), PixelCoord(2, 1), 8)
    assert [tuple(p) for p in tail.pixels] == pts
    steps = [(q.row - p.row, q.col - p.col) for p, q in zip(tail.pixels, tail.pixels[1:])]
    assert steps == [(0, 1)] + [(0, 1), (1, 0)] * 3


def test_tail_pixels_adjacent_and_foreground(shapes):
    for img in shapes[:14]:
        skel, _ = remove_crossed_points(zhang_suen_thin(img))
        for e in detect_endpoints(skel):
            tail = trace_tail(skel, e, 8)
            assert tail.pixels[0] == e
            for p, q in zip(tail.pixels, tail.pixels[1:]):
                assert max(abs(p.row - q.row), abs(p.col - q.col)) == 1
            assert all(skel.data[p] for p in tail.pixels)
            assert len(set(tail.pixels)) == len(tail.pixels)


def test_tail_errors():
    a = canvas()
    a[4, 2:7] = 1
    img = BinaryImage(a)
    with pytest.raises(ValueError):
        trace_tail(img, PixelCoord(0, 0), 5)
    with pytest.raises(ValueError):
        trace_tail(img, PixelCoord(4, 4), 5)
    with pytest.raises(ValueError):
        trace_tail(img, PixelCoord(4, 2), 1)
