"""Binarization by histogram-spread midpoint, then 3x3 median cleanup."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import BinaryImage, GrayImage


@dataclass(frozen=True)
class ThresholdReport:
    low: int
    high: int
    midpoint: int


def histogram(img: GrayImage) -> np.ndarray:
    """Return the 256-bin intensity histogram of ``img``."""
    return np.bincount(img.data.ravel(), minlength=256)


def spread_midpoint(bins) -> ThresholdReport:
    """Midpoint of the occupied intensity range, ``floor((low + high) / 2)``."""
    occupied = np.flatnonzero(np.asarray(bins))
    if occupied.size == 0:
        raise ValueError("histogram has no occupied bins")
    low, high = int(occupied[0]), int(occupied[-1])
    return ThresholdReport(low=low, high=high, midpoint=(low + high) // 2)


def threshold(img: GrayImage, m: int) -> BinaryImage:
    """Pixels brighter than ``m`` become background (0); the rest become ink (1)."""
    if not 0 <= m <= 255:
        raise ValueError(f"threshold {m} outside [0, 255]")
    return BinaryImage(img.data <= m)


def median_filter3(img: BinaryImage) -> BinaryImage:
    # zero padding at the border
    out = ndimage.median_filter(img.data, size=3, mode="constant", cval=0)
    return BinaryImage(out)


def binarize(img: GrayImage, m: int | None = None, median_passes: int = 1):
    """Threshold (auto midpoint when ``m`` is None) and median-filter ``median_passes`` times.

    Returns ``(binary, threshold_used)``.
    """
    if m is None:
        m = spread_midpoint(histogram(img)).midpoint
    out = threshold(img, m)
    for _ in range(median_passes):
        out = median_filter3(out)
    return out, m
