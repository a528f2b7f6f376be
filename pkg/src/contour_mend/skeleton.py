"""Skeletonization and endpoint extraction on binary contour rasters.

Neighbour numbering follows the usual thinning convention, clockwise from
north::

    P9 P2 P3
    P8 P1 P4
    P7 P6 P5
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .raster import BinaryImage, PixelCoord

log = logging.getLogger(__name__)

# (drow, dcol) for P2..P9
NEIGHBOR_OFFSETS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))

_EIGHT = np.ones((3, 3), dtype=int)


@dataclass
class Endpoint:
    pos: PixelCoord
    gx: float = 0.0
    gy: float = 0.0
    direction: float | None = None
    dir_class: int | None = None
    contour_id: int = -1

    def to_dict(self) -> dict:
        return {
            "pos": [int(self.pos.row), int(self.pos.col)],
            "gx": float(self.gx),
            "gy": float(self.gy),
            "direction": None if self.direction is None else float(self.direction),
            "dir_class": self.dir_class,
            "contour_id": int(self.contour_id),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Endpoint":
        return cls(
            pos=PixelCoord(*d["pos"]),
            gx=d.get("gx", 0.0),
            gy=d.get("gy", 0.0),
            direction=d.get("direction"),
            dir_class=d.get("dir_class"),
            contour_id=d.get("contour_id", -1),
        )


@dataclass
class ContourTail:
    endpoint: PixelCoord
    pixels: list[PixelCoord] = field(default_factory=list)


def _neighbors(a: np.ndarray) -> list[np.ndarray]:
    """Return P2..P9 planes of a zero-padded copy of ``a``."""
    p = np.pad(a, 1)
    h, w = a.shape
    return [p[1 + dr:1 + dr + h, 1 + dc:1 + dc + w] for dr, dc in NEIGHBOR_OFFSETS]


def _crossing_and_count(a: np.ndarray):
    nb = _neighbors(a)
    count = sum(n.astype(np.int32) for n in nb)
    trans = sum(((nb[i] == 0) & (nb[(i + 1) % 8] == 1)).astype(np.int32) for i in range(8))
    return trans, count, nb


def crossing_number(img: BinaryImage) -> np.ndarray:
    """Per-pixel count of 0->1 transitions around P2..P9,P2 (computed for every pixel)."""
    return _crossing_and_count(img.data)[0]


def neighbor_sum(img: BinaryImage) -> np.ndarray:
    return ndimage.convolve(img.data.astype(np.int32), _EIGHT, mode="constant") - img.data


def zhang_suen_thin(img: BinaryImage, max_iter: int = 10_000) -> BinaryImage:
    """Two-sub-pass parallel thinning, iterated until a full pass deletes nothing."""
    a = img.data.astype(np.uint8).copy()
    for _ in range(max_iter):
        changed = False
        for second in (False, True):
            trans, count, nb = _crossing_and_count(a)
            p2, _, p4, _, p6, _, p8, _ = nb
            if not second:
                c1 = (p2 & p4 & p6) == 0
                c2 = (p4 & p6 & p8) == 0
            else:
                c1 = (p2 & p4 & p8) == 0
                c2 = (p2 & p6 & p8) == 0
            delete = (a == 1) & (count >= 2) & (count <= 6) & (trans == 1) & c1 & c2
            if delete.any():
                a[delete] = 0
                changed = True
        if not changed:
            break
    else:
        raise RuntimeError("thinning did not converge")
    return BinaryImage(a)


def remove_crossed_points(img: BinaryImage):
    """Delete every pixel branching in three or more directions.

    Each round deletes simultaneously on a frozen copy; rounds repeat because
    removing a junction can split a neighbour's ring into extra arms.
    Returns ``(cleaned, crossed)`` with ``crossed`` in raster order.
    """
    a = img.data.copy()
    crossed = np.zeros_like(a, dtype=bool)
    while True:
        hit = (a == 1) & (_crossing_and_count(a)[0] >= 3)
        if not hit.any():
            break
        a[hit] = 0
        crossed |= hit
    coords = [PixelCoord(int(r), int(c)) for r, c in zip(*np.nonzero(crossed))]
    return BinaryImage(a), coords


def detect_endpoints(img: BinaryImage) -> list[PixelCoord]:
    """Foreground pixels with exactly one 8-neighbour, excluding the 1-pixel border."""
    s = neighbor_sum(img)
    hit = (img.data == 1) & (s == 1)
    hit[0, :] = hit[-1, :] = False
    hit[:, 0] = hit[:, -1] = False
    return [PixelCoord(int(r), int(c)) for r, c in zip(*np.nonzero(hit))]


def label_components(img: BinaryImage) -> np.ndarray:
    """8-connected component ids, dense from 0 in raster order; background is -1."""
    labels, _ = ndimage.label(img.data, structure=_EIGHT)
    return labels.astype(np.int64) - 1


def count_components(img: BinaryImage) -> int:
    return int(ndimage.label(img.data, structure=_EIGHT)[1])


def _fg_neighbors(a: np.ndarray, p: PixelCoord) -> list[PixelCoord]:
    h, w = a.shape
    out = []
    for dr, dc in NEIGHBOR_OFFSETS:
        r, c = p.row + dr, p.col + dc
        if 0 <= r < h and 0 <= c < w and a[r, c]:
            out.append(PixelCoord(r, c))
    return out


def trace_tail(img: BinaryImage, start: PixelCoord, k: int = 5) -> ContourTail:
    """Walk up to ``k`` pixels inward from endpoint ``start``.

    A pair of mutually adjacent candidates (a staircase corner) is resolved
    toward the 4-adjacent one; any other fork stops the walk.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    a = img.data
    start = PixelCoord(int(start[0]), int(start[1]))
    if not a[start]:
        raise ValueError(f"{start} is not a foreground pixel")
    if len(_fg_neighbors(a, start)) != 1:
        raise ValueError(f"{start} is not an endpoint")
    pixels = [start]
    visited = {start}
    cur = start
    while len(pixels) < k:
        cands = [q for q in _fg_neighbors(a, cur) if q not in visited]
        if not cands:
            break
        if len(cands) == 2 and max(abs(cands[0].row - cands[1].row),
                                   abs(cands[0].col - cands[1].col)) == 1:
            four = [q for q in cands if abs(q.row - cur.row) + abs(q.col - cur.col) == 1]
            cands = four[:1] or sorted(cands)[:1]
        elif len(cands) > 1:
            # neighbours of already-walked pixels are corner clumps, not branches
            fresh = [q for q in cands if not any(
                max(abs(q.row - v.row), abs(q.col - v.col)) == 1 for v in pixels[:-1])]
            if len(fresh) == 1:
                cands = fresh
        if len(cands) != 1:
            log.debug("tail from %s stops at fork %s", start, cur)
            break
        cur = cands[0]
        visited.add(cur)
        pixels.append(cur)
    return ContourTail(endpoint=start, pixels=pixels)
