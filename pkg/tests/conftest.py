import numpy as np
import pytest

from contour_mend.raster import BinaryImage


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def draw_disk_line(shape, pts, radius=1.2):
    """Binary image of a thick polyline through ``pts`` ((row, col) pairs)."""
    a = np.zeros(shape, dtype=np.uint8)
    rr, cc = np.mgrid[0:shape[0], 0:shape[1]]
    pts = np.asarray(pts, dtype=float)
    for p, q in zip(pts[:-1], pts[1:]):
        n = int(np.ceil(np.hypot(*(q - p)) / 0.25)) + 1
        for t in np.linspace(0, 1, n):
            r, c = p + t * (q - p)
            a[(rr - r) ** 2 + (cc - c) ** 2 <= radius ** 2] = 1
    return BinaryImage(a)


def ring(shape, center, radius, width=1.3):
    rr, cc = np.mgrid[0:shape[0], 0:shape[1]]
    d = np.hypot(rr - center[0], cc - center[1])
    return BinaryImage(np.abs(d - radius) <= width)


def open_curve_corpus():
    """Thick simple open curves (bars, arcs, zigzags, waves)."""
    out = []
    for k in range(4):
        a = np.zeros((40, 60), dtype=np.uint8)
        a[10:13 + k, 5:50 - 5 * k] = 1
        out.append(BinaryImage(a))
    for ang in (20, 35, 60, 110, 150):
        t = np.radians(ang)
        p = np.array([30.0, 30.0])
        d = np.array([np.sin(t), np.cos(t)]) * 22
        out.append(draw_disk_line((64, 64), [p - d, p + d]))
    for span in (90, 180, 250):
        th = np.radians(np.linspace(0, span, 60))
        pts = np.column_stack([40 + 25 * np.sin(th), 40 + 25 * np.cos(th)])
        out.append(draw_disk_line((84, 84), pts))
    out.append(draw_disk_line((60, 90), [(10, 5), (45, 30), (12, 55), (48, 84)]))
    x = np.linspace(5, 115, 80)
    out.append(draw_disk_line((60, 120), np.column_stack([30 + 15 * np.sin(x / 12), x])))
    return out


def shape_corpus():
    """30 images: 14 open curves, 8 rings, 8 crossing-stroke figures."""
    imgs = open_curve_corpus()
    for r, w in ((8, 1.3), (12, 1.3), (18, 1.3), (25, 1.3), (10, 2.0), (20, 2.0), (15, 0.9), (27, 1.6)):
        imgs.append(ring((64, 64), (32, 32), r, width=w))
    crossings = [
        [[(5, 30), (55, 30)], [(30, 5), (30, 55)]],
        [[(5, 5), (55, 55)], [(5, 55), (55, 5)]],
        [[(5, 30), (55, 30)], [(30, 5), (30, 30)]],
        [[(8, 8), (50, 40)], [(50, 8), (8, 40)], [(30, 2), (30, 58)]],
        [[(5, 10), (55, 50)], [(30, 5), (30, 55)]],
        [[(10, 5), (10, 55)], [(50, 5), (50, 55)], [(5, 30), (55, 30)]],
        [[(5, 5), (30, 30), (5, 55)], [(55, 30), (30, 30)]],
        [[(30, 3), (30, 57)], [(3, 20), (57, 20)], [(3, 40), (57, 40)]],
    ]
    for strokes in crossings:
        acc = np.zeros((60, 60), dtype=np.uint8)
        for s in strokes:
            acc |= draw_disk_line((60, 60), s).data
        imgs.append(BinaryImage(acc))
    assert len(imgs) == 30
    return imgs


@pytest.fixture(scope="session")
def shapes():
    return shape_corpus()
