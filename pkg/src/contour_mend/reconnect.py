"""Spline bridging of matched endpoints.

Gaps are closed with a single parametric cubic Hermite segment whose end
tangents come from the contour tails. A natural cubic spline on uniform
knots is also provided for fitting through several points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matcher import MatchPair
from .raster import BinaryImage, PixelCoord
from .skeleton import ContourTail


# ---------------------------------------------------------------------------
# Natural cubic spline on uniform knots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplineSegment:
    """``S(x) = a t^3 + b t^2 + c t + d`` with ``t = x - x_i`` on ``[x_i, x_i + h]``."""

    x0: float
    h: float
    a: float
    b: float
    c: float
    d: float
    m0: float
    m1: float
    y0: float
    y1: float

    def __call__(self, x):
        t = np.asarray(x, dtype=float) - self.x0
        return ((self.a * t + self.b) * t + self.c) * t + self.d

    def derivative(self, x, order: int = 1):
        t = np.asarray(x, dtype=float) - self.x0
        if order == 1:
            return (3 * self.a * t + 2 * self.b) * t + self.c
        if order == 2:
            return 6 * self.a * t + 2 * self.b
        raise ValueError("order must be 1 or 2")


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Thomas algorithm for a tridiagonal system.

    ``lower`` and ``upper`` have one entry fewer than ``diag``.
    """
    n = len(diag)
    c = np.zeros(n)
    d = np.zeros(n)
    c[0] = upper[0] / diag[0] if n > 1 else 0.0
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * c[i - 1]
        if i < n - 1:
            c[i] = upper[i] / denom
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom
    x = np.zeros(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def second_derivatives(ys, h: float) -> np.ndarray:
    """Knot second derivatives M with M[0] = M[-1] = 0.

    Interior rows are ``M[i-1] + 4 M[i] + M[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1]) / h^2``.
    """
    ys = np.asarray(ys, dtype=float)
    n = len(ys)
    m = np.zeros(n)
    if n > 2:
        rhs = 6.0 * (ys[:-2] - 2 * ys[1:-1] + ys[2:]) / h ** 2
        k = n - 2
        m[1:-1] = solve_tridiagonal(np.ones(k - 1), np.full(k, 4.0), np.ones(k - 1), rhs)
    return m


def natural_cubic_spline(xs, ys, rtol: float = 1e-9) -> list[SplineSegment]:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) != len(ys):
        raise ValueError("xs and ys differ in length")
    if len(xs) < 2:
        raise ValueError("need at least two knots")
    steps = np.diff(xs)
    h = float(steps[0])
    if h <= 0 or np.any(steps <= 0):
        raise ValueError("knots must be strictly increasing")
    if np.any(np.abs(steps - h) > rtol * max(1.0, abs(h))):
        raise ValueError("knots must be uniformly spaced")
    m = second_derivatives(ys, h)
    segs = []
    for i in range(len(xs) - 1):
        segs.append(SplineSegment(
            x0=float(xs[i]), h=h,
            a=(m[i + 1] - m[i]) / (6 * h),
            b=m[i] / 2,
            c=(ys[i + 1] - ys[i]) / h - (m[i + 1] + 2 * m[i]) * h / 6,
            d=float(ys[i]),
            m0=float(m[i]), m1=float(m[i + 1]),
            y0=float(ys[i]), y1=float(ys[i + 1]),
        ))
    return segs


def spline(xs, ys, xq) -> np.ndarray:
    """Evaluate the natural cubic spline through (xs, ys) at query points ``xq``.

    Queries outside the knot range extrapolate with the end segments.
    """
    segs = natural_cubic_spline(xs, ys)
    xq = np.asarray(xq, dtype=float)
    idx = np.clip(np.searchsorted(np.asarray(xs, dtype=float), xq, side="right") - 1,
                  0, len(segs) - 1)
    out = np.empty_like(xq)
    for i in np.unique(idx):
        sel = idx == i
        out[sel] = segs[i](xq[sel])
    return out


# ---------------------------------------------------------------------------
# Cubic Hermite gap curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HermiteSegment:
    p0: np.ndarray
    p1: np.ndarray
    t0: np.ndarray
    t1: np.ndarray

    def speed_bound(self) -> float:
        # max |dC/du| is bounded by 3x the longest leg of the equivalent Bezier polygon
        c1 = self.p0 + self.t0 / 3
        c2 = self.p1 - self.t1 / 3
        legs = (c1 - self.p0, c2 - c1, self.p1 - c2)
        return 3 * max(float(np.hypot(*leg)) for leg in legs)


def hermite_basis(u):
    u = np.asarray(u, dtype=float)
    u2, u3 = u * u, u * u * u
    return (2 * u3 - 3 * u2 + 1, u3 - 2 * u2 + u, -2 * u3 + 3 * u2, u3 - u2)


def hermite_eval(seg: HermiteSegment, u) -> np.ndarray:
    """Point(s) on ``seg`` at parameter ``u`` in [0, 1]; shape (2,) or (len(u), 2)."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0) or np.any(u_arr > 1):
        raise ValueError("parameter must lie in [0, 1]")
    h00, h10, h01, h11 = hermite_basis(u_arr)
    return (np.multiply.outer(h00, seg.p0) + np.multiply.outer(h10, seg.t0)
            + np.multiply.outer(h01, seg.p1) + np.multiply.outer(h11, seg.t1))


@dataclass
class ReconnectionPath:
    pair: MatchPair
    samples: np.ndarray
    pixels: list[PixelCoord] = field(default_factory=list)

    def to_dict(self, debug: bool = False) -> dict:
        d = {
            "a": [int(v) for v in self.pair.a.pos],
            "b": [int(v) for v in self.pair.b.pos],
            "pixel_count": len(self.pixels),
        }
        if debug:
            d["samples"] = [[round(float(r), 6), round(float(c), 6)] for r, c in self.samples]
            d["pixels"] = [[int(r), int(c)] for r, c in self.pixels]
        return d


def tail_direction(tail: ContourTail) -> np.ndarray | None:
    """Unit direction pointing out of the contour through the tail's endpoint.

    Principal axis of the tail pixels, oriented from the tail's far end
    toward the endpoint. None when the tail is a single pixel.
    """
    pts = np.asarray(tail.pixels, dtype=float)
    if len(pts) < 2:
        return None
    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    axis = vt[0]
    outward = pts[0] - pts[-1]
    if axis @ outward < 0:
        axis = -axis
    n = np.hypot(*axis)
    return axis / n if n > 0 else None


def build_path(pair: MatchPair, tail_a: ContourTail | None, tail_b: ContourTail | None,
               step: float = 0.5) -> ReconnectionPath:
    p0 = np.asarray(pair.a.pos, dtype=float)
    p1 = np.asarray(pair.b.pos, dtype=float)
    if tail_a is not None and tuple(tail_a.endpoint) != tuple(pair.a.pos):
        raise ValueError("tail_a does not start at pair.a")
    if tail_b is not None and tuple(tail_b.endpoint) != tuple(pair.b.pos):
        raise ValueError("tail_b does not start at pair.b")
    chord = p1 - p0
    length = float(np.hypot(*chord))
    if length == 0:
        return ReconnectionPath(pair, p0[None, :].copy(), [PixelCoord(*pair.a.pos)])
    unit = chord / length
    out_a = tail_direction(tail_a) if tail_a is not None else None
    out_b = tail_direction(tail_b) if tail_b is not None else None
    t0 = (out_a if out_a is not None else unit) * length
    # the curve enters b travelling against b's outward direction
    t1 = (-out_b if out_b is not None else unit) * length
    seg = HermiteSegment(p0, p1, t0, t1)
    n = max(1, math.ceil(seg.speed_bound() / step))
    samples = hermite_eval(seg, np.linspace(0.0, 1.0, n + 1))
    samples[0], samples[-1] = p0, p1
    return ReconnectionPath(pair, samples, rasterize(samples))


def _round(v: float) -> int:
    return int(math.floor(v + 0.5))


def _line(a: tuple[int, int], b: tuple[int, int]) -> list[tuple[int, int]]:
    """8-connected integer steps from a to b, excluding a."""
    (r0, c0), (r1, c1) = a, b
    n = max(abs(r1 - r0), abs(c1 - c0))
    return [(r0 + _round((r1 - r0) * i / n), c0 + _round((c1 - c0) * i / n))
            for i in range(1, n + 1)]


def rasterize(samples) -> list[PixelCoord]:
    """Round samples to pixels and bridge them into a loop-free 8-connected chain."""
    pts = [(_round(r), _round(c)) for r, c in np.asarray(samples, dtype=float)]
    chain = [pts[0]]
    index = {pts[0]: 0}
    for q in pts[1:]:
        if q == chain[-1]:
            continue
        for s in _line(chain[-1], q):
            if s in index:
                # curve revisited a pixel: drop the loop
                for dropped in chain[index[s] + 1:]:
                    del index[dropped]
                del chain[index[s] + 1:]
            else:
                index[s] = len(chain)
                chain.append(s)
    return [PixelCoord(r, c) for r, c in chain]


def apply_reconnection(img: BinaryImage, paths) -> BinaryImage:
    a = img.data.copy()
    h, w = a.shape
    for path in paths:
        for r, c in path.pixels:
            if not (0 <= r < h and 0 <= c < w):
                raise ValueError(f"path pixel ({r}, {c}) outside {h}x{w} image")
            a[r, c] = 1
    return BinaryImage(a)
