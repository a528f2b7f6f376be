"""3x3 zoning features and nearest-template digit classification.

Zones are numbered 1..9 row-major over the glyph box, with band edges at
exact thirds of the box. A pixel straddling an edge contributes to each
zone in proportion to its overlap, so counts are integers whenever the box
sides are multiples of 3 and profiles are unchanged by integer upscaling.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .raster import BinaryImage

FONT_5X7 = {
    0: [".###.",
        "#...#",
        "#...#",
        "#...#",
        "#...#",
        "#...#",
        ".###."],
    1: ["..#..",
        ".##..",
        "..#..",
        "..#..",
        "..#..",
        "..#..",
        ".###."],
    2: [".###.",
        "#...#",
        "....#",
        "...#.",
        "..#..",
        ".#...",
        "#####"],
    3: ["####.",
        "....#",
        "....#",
        ".###.",
        "....#",
        "....#",
        "####."],
    4: ["...#.",
        "..##.",
        ".#.#.",
        "#..#.",
        "#####",
        "...#.",
        "...#."],
    5: ["#####",
        "#....",
        "####.",
        "....#",
        "....#",
        "#...#",
        ".###."],
    6: ["..##.",
        ".#...",
        "#....",
        "####.",
        "#...#",
        "#...#",
        ".###."],
    7: ["#####",
        "....#",
        "...#.",
        "..#..",
        ".#...",
        ".#...",
        ".#..."],
    8: [".###.",
        "#...#",
        "#...#",
        ".###.",
        "#...#",
        "#...#",
        ".###."],
    9: [".###.",
        "#...#",
        "#...#",
        ".####",
        "....#",
        "...#.",
        ".##.."],
}


def render_digit(digit: int, scale: int = 1) -> BinaryImage:
    """Bitmap of ``digit`` from the built-in font, upscaled by nearest neighbour."""
    rows = FONT_5X7[digit]
    a = np.array([[ch == "#" for ch in row] for row in rows], dtype=np.uint8)
    if scale > 1:
        a = np.kron(a, np.ones((scale, scale), dtype=np.uint8))
    return BinaryImage(a)


@dataclass(frozen=True)
class ZoneProfile:
    counts: tuple[float, ...]

    @property
    def total(self) -> float:
        return float(sum(self.counts))

    @property
    def normalized(self) -> tuple[float, ...]:
        t = self.total
        return tuple(c / t for c in self.counts) if t else (0.0,) * 9

    def zone(self, z: int) -> float:
        """Count for 1-based zone number ``z``."""
        return self.counts[z - 1]


@dataclass(frozen=True)
class DigitTemplate:
    digit: int
    profile: tuple[float, ...]


def band_weights(size: int) -> np.ndarray:
    """(3, size) matrix: overlap of pixel ``i`` with band ``z`` (rows sum to size / 3)."""
    lo = np.arange(3)[:, None] * size / 3
    hi = lo + size / 3
    px = np.arange(size)[None, :]
    return np.clip(np.minimum(hi, px + 1) - np.maximum(lo, px), 0.0, None)


def zone_features(glyph: BinaryImage) -> ZoneProfile:
    if glyph.height < 3 or glyph.width < 3:
        raise ValueError(f"glyph {glyph.height}x{glyph.width} is smaller than 3x3")
    zones = band_weights(glyph.height) @ glyph.data.astype(float) @ band_weights(glyph.width).T
    # snap float noise so divisible boxes give exact integer counts
    zones = np.where(np.abs(zones - np.round(zones)) < 1e-9, np.round(zones), zones)
    return ZoneProfile(tuple(float(v) for v in zones.ravel()))


def default_templates() -> list[DigitTemplate]:
    return [DigitTemplate(d, zone_features(render_digit(d)).normalized) for d in range(10)]


def classify_digit(profile: ZoneProfile, templates=None) -> tuple[int, float]:
    """Digit whose template profile is nearest in L1; ties go to the smaller digit."""
    if profile.total == 0:
        raise ValueError("cannot classify a blank glyph")
    templates = list(templates) if templates is not None else default_templates()
    if not templates:
        raise ValueError("template set is empty")
    x = np.asarray(profile.normalized)
    scored = sorted((float(np.abs(x - np.asarray(t.profile)).sum()), t.digit) for t in templates)
    score, digit = scored[0]
    return digit, score


def crop_to_ink(glyph: BinaryImage) -> BinaryImage:
    rows = np.flatnonzero(glyph.data.any(axis=1))
    cols = np.flatnonzero(glyph.data.any(axis=0))
    if rows.size == 0:
        return glyph
    return BinaryImage(glyph.data[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1])


def load_templates(text: str) -> list[DigitTemplate]:
    """Parse template rows ``<digit> v1 ... v9`` (comma/space separated, ``#`` comments).

    Values are normalized so each row sums to 1.
    """
    out: dict[int, DigitTemplate] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f for f in re.split(r"[\s,:]+", line) if f]
        if len(fields) != 10:
            raise ValueError(f"line {lineno}: expected a digit and 9 values")
        digit = int(fields[0])
        if not 0 <= digit <= 9:
            raise ValueError(f"line {lineno}: digit {digit} out of range")
        if digit in out:
            raise ValueError(f"line {lineno}: duplicate template for digit {digit}")
        vals = np.array([float(v) for v in fields[1:]])
        if np.any(vals < 0) or vals.sum() == 0:
            raise ValueError(f"line {lineno}: values must be non-negative and not all zero")
        out[digit] = DigitTemplate(digit, tuple((vals / vals.sum()).tolist()))
    return [out[d] for d in sorted(out)]
