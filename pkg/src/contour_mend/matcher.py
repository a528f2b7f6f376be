"""Endpoint gradients and pairing.

Each endpoint gets a Sobel gradient and a binary direction class (1 when the
four-quadrant angle is strictly positive). Pairs must have opposite classes.
Pairing runs twice: first inside a square window around each endpoint, then
over the leftover pool out to ``max_gap``. Within a phase, an endpoint is
paired only with a candidate that also picks it as its own nearest
(mutual minimum), repeated until no new pair forms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .raster import BinaryImage, GrayImage, PixelCoord
from .skeleton import Endpoint, label_components

log = logging.getLogger(__name__)

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]])
SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]])

WINDOWED = "windowed"
GLOBAL = "global"


class UndefinedDirectionError(ValueError):
    """Raised for a zero gradient, whose direction is undefined."""


@dataclass(frozen=True)
class MatchConfig:
    window: int = 11
    max_gap: float = 80.0
    tie_epsilon: float = 1e-6

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {self.window}")
        if self.max_gap <= 0:
            raise ValueError("max_gap must be positive")


@dataclass
class MatchPair:
    a: Endpoint
    b: Endpoint
    distance: float
    phase: str

    def to_dict(self) -> dict:
        return {
            "a": [int(self.a.pos.row), int(self.a.pos.col)],
            "b": [int(self.b.pos.row), int(self.b.pos.col)],
            "distance": float(self.distance),
            "phase": self.phase,
        }


def sobel_at(img: GrayImage, p: PixelCoord) -> tuple[int, int]:
    r, c = p
    if not (1 <= r < img.height - 1 and 1 <= c < img.width - 1):
        raise ValueError(f"{tuple(p)} lies on the image border")
    patch = img.data[r - 1:r + 2, c - 1:c + 2].astype(np.int64)
    return int((patch * SOBEL_X).sum()), int((patch * SOBEL_Y).sum())


def gradient_direction(gx: float, gy: float) -> float:
    """Four-quadrant angle of (gx, gy) in degrees, in (-180, 180]."""
    if gx == 0 and gy == 0:
        raise UndefinedDirectionError("zero gradient has no direction")
    deg = math.degrees(math.atan2(gy, gx))
    return 180.0 if deg == -180.0 else deg


def dir_class(direction: float) -> int:
    return 1 if direction > 0 else 0


def euclidean(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def describe_endpoints(skeleton: BinaryImage, coords, gradient_source: GrayImage | None = None,
                       labels: np.ndarray | None = None) -> list[Endpoint]:
    """Attach gradients, direction classes and contour ids to endpoint coordinates.

    Gradients come from ``gradient_source`` when given, else from the skeleton
    promoted to {0, 255}. Endpoints with a zero gradient keep ``direction=None``.
    """
    src = gradient_source if gradient_source is not None else skeleton.to_gray()
    if labels is None:
        labels = label_components(skeleton)
    out = []
    for p in coords:
        p = PixelCoord(int(p[0]), int(p[1]))
        gx, gy = sobel_at(src, p)
        try:
            d = gradient_direction(gx, gy)
            cls = dir_class(d)
        except UndefinedDirectionError:
            log.info("endpoint %s has zero gradient; excluded from matching", tuple(p))
            d, cls = None, None
        out.append(Endpoint(pos=p, gx=gx, gy=gy, direction=d, dir_class=cls,
                            contour_id=int(labels[p])))
    return out


def _antipodal_error(a: Endpoint, b: Endpoint) -> float:
    diff = abs((a.direction - b.direction) % 360.0)
    diff = min(diff, 360.0 - diff)
    return abs(diff - 180.0)


def _best(e: Endpoint, cands: list[Endpoint], eps: float) -> Endpoint | None:
    if not cands:
        return None
    dists = [euclidean(e.pos, c.pos) for c in cands]
    dmin = min(dists)
    near = [c for c, d in zip(cands, dists) if d <= dmin + eps]
    return min(near, key=lambda c: (_antipodal_error(e, c), tuple(c.pos)))


def _mutual_rounds(pool: list[Endpoint], candidates, cfg: MatchConfig, phase: str):
    """Commit mutual-nearest pairs repeatedly; ``candidates(e, live)`` lists eligible partners."""
    pairs = []
    live = sorted(pool, key=lambda e: tuple(e.pos))
    while True:
        best = {id(e): _best(e, candidates(e, live), cfg.tie_epsilon) for e in live}
        taken: set[int] = set()
        for e in live:
            f = best[id(e)]
            if f is None or id(e) in taken or id(f) in taken:
                continue
            if best[id(f)] is e and tuple(e.pos) < tuple(f.pos):
                pairs.append(MatchPair(e, f, euclidean(e.pos, f.pos), phase))
                taken.update((id(e), id(f)))
        if not taken:
            return pairs, live
        live = [e for e in live if id(e) not in taken]


def match_endpoints(endpoints: list[Endpoint], cfg: MatchConfig = MatchConfig()):
    """Pair endpoints; returns ``(pairs, unmatched)`` which partition the input."""
    usable = [e for e in endpoints if e.dir_class is not None]
    skipped = [e for e in endpoints if e.dir_class is None]
    radius = (cfg.window - 1) // 2

    def windowed(e, live):
        return [f for f in live if f is not e and f.dir_class != e.dir_class
                and f.contour_id != e.contour_id
                and abs(f.pos.row - e.pos.row) <= radius
                and abs(f.pos.col - e.pos.col) <= radius]

    def global_(e, live):
        near = [f for f in live if f is not e and f.dir_class != e.dir_class
                and euclidean(e.pos, f.pos) <= cfg.max_gap]
        cross = [f for f in near if f.contour_id != e.contour_id]
        return cross or near

    pairs1, rest = _mutual_rounds(usable, windowed, cfg, WINDOWED)
    pairs2, rest = _mutual_rounds(rest, global_, cfg, GLOBAL)
    unmatched = sorted(rest + skipped, key=lambda e: tuple(e.pos))
    pairs = sorted(pairs1 + pairs2, key=lambda p: (tuple(p.a.pos), tuple(p.b.pos)))
    return pairs, unmatched
