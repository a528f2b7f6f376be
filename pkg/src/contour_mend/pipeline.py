"""End-to-end reconstruction: binarize, thin, find endpoints, match, bridge."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import matcher, preprocess, reconnect, skeleton
from .raster import BinaryImage, GrayImage

REPORT_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    threshold: int | None = None  # None = histogram-spread midpoint
    median_passes: int = 1
    window: int = 11
    max_gap: float = 80.0
    tail_k: int = 5
    sample_step: float = 0.5
    gradient_source: str = "skeleton"  # or "binary"
    dump_stages: bool = False

    def __post_init__(self):
        if self.threshold is not None and not 0 <= self.threshold <= 255:
            raise ValueError("threshold must lie in [0, 255]")
        if self.median_passes < 0:
            raise ValueError("median_passes must be non-negative")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.max_gap <= 0 or self.sample_step <= 0:
            raise ValueError("max_gap and sample_step must be positive")
        if self.tail_k < 2:
            raise ValueError("tail_k must be at least 2")
        if self.gradient_source not in ("skeleton", "binary"):
            raise ValueError("gradient_source must be 'skeleton' or 'binary'")

    @property
    def match_config(self) -> matcher.MatchConfig:
        return matcher.MatchConfig(window=self.window, max_gap=self.max_gap)


@dataclass
class PipelineResult:
    threshold: int
    binary: BinaryImage
    thinned: BinaryImage
    skeleton: BinaryImage
    crossed: list
    endpoints: list
    pairs: list
    unmatched: list
    paths: list
    reconstructed: BinaryImage
    timings: dict = field(default_factory=dict)

    def report(self, timings: bool = False, debug_paths: bool = False) -> dict:
        out = {
            "version": REPORT_VERSION,
            "threshold": int(self.threshold),
            "crossed_points": [[int(r), int(c)] for r, c in self.crossed],
            "endpoints": [e.to_dict() for e in self.endpoints],
            "pairs": [p.to_dict() for p in self.pairs],
            "unmatched": [[int(e.pos.row), int(e.pos.col)] for e in self.unmatched],
            "has_unmatched": bool(self.unmatched),
            "paths": [p.to_dict(debug=debug_paths) for p in self.paths],
        }
        if timings:
            out["timings"] = {k: round(v, 6) for k, v in self.timings.items()}
        return out


def skeletonize(binary: BinaryImage):
    thinned = skeleton.zhang_suen_thin(binary)
    cleaned, crossed = skeleton.remove_crossed_points(thinned)
    return thinned, cleaned, crossed


def bridge(skel: BinaryImage, pairs, tail_k: int = 5, step: float = 0.5):
    """Build one reconnection path per pair from tails traced on ``skel``."""
    paths = []
    for pair in pairs:
        ta = skeleton.trace_tail(skel, pair.a.pos, tail_k)
        tb = skeleton.trace_tail(skel, pair.b.pos, tail_k)
        paths.append(reconnect.build_path(pair, ta, tb, step))
    return paths


def run(img: GrayImage, cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    timings = {}
    t = time.perf_counter()

    def lap(name):
        nonlocal t
        now = time.perf_counter()
        timings[name] = now - t
        t = now

    binary, m = preprocess.binarize(img, cfg.threshold, cfg.median_passes)
    lap("preprocess")
    thinned, skel, crossed = skeletonize(binary)
    lap("thin")
    coords = skeleton.detect_endpoints(skel)
    source = binary.to_gray() if cfg.gradient_source == "binary" else None
    endpoints = matcher.describe_endpoints(skel, coords, gradient_source=source)
    lap("endpoints")
    pairs, unmatched = matcher.match_endpoints(endpoints, cfg.match_config)
    lap("match")
    paths = bridge(skel, pairs, cfg.tail_k, cfg.sample_step)
    reconstructed = reconnect.apply_reconnection(skel, paths)
    lap("reconnect")
    return PipelineResult(m, binary, thinned, skel, crossed, endpoints, pairs,
                          unmatched, paths, reconstructed, timings)


def overlay(result: PipelineResult) -> GrayImage:
    """Debug view: background 255, skeleton ink 80, bridged pixels 0, endpoints 160 (3x3)."""
    a = np.full(result.skeleton.data.shape, 255, dtype=np.uint8)
    a[result.skeleton.data == 1] = 80
    h, w = a.shape
    for e in result.endpoints:
        r, c = e.pos
        a[max(r - 1, 0):min(r + 2, h), max(c - 1, 0):min(c + 2, w)] = 160
    for path in result.paths:
        for r, c in path.pixels:
            a[r, c] = 0
    return GrayImage(a)
