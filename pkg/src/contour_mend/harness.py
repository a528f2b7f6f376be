"""Synthetic contour maps with known geometry, gap injection, and scoring.

Maps are closed level-set curves of a sum of Gaussian bumps, drawn as dark
strokes on a light background with salt-and-pepper noise. Gaps are cut
across the stroke at random arc positions; the pixels just outside each cut
are the ground-truth endpoint pair.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from skimage import measure

from . import pipeline, preprocess, skeleton
from .raster import BinaryImage, GrayImage, PixelCoord, load_pgm, save_pgm

log = logging.getLogger(__name__)

INK = 30
BACKGROUND = 240
NOISE_DENSITY = 0.005
MARGIN = 12
MIN_SEPARATION = 12.0
MIN_CURVE_LENGTH = 80.0
# a thinned blunt stroke end retracts about half the stroke width plus one
# pixel from the cut
ENDPOINT_RETRACTION = 1.0
# how far from that estimate a clean-skeleton terminal may be adopted
SNAP_RADIUS = 4.0


class HarnessError(RuntimeError):
    pass


@dataclass
class SyntheticMap:
    image: GrayImage
    truth_curves: list  # list of (N, 2) float arrays of (row, col), closed (first == last)
    seed: int
    stroke: list = field(default_factory=list)  # per-curve half-width, px
    ink: np.ndarray | None = None  # rendered stroke mask, before noise


@dataclass
class GapRecord:
    curve_index: int
    start: float  # arc position of the cut, px
    length: float
    erased: int  # pixels painted over
    a: PixelCoord
    b: PixelCoord

    def to_dict(self) -> dict:
        d = asdict(self)
        d["a"], d["b"] = list(self.a), list(self.b)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GapRecord":
        return cls(d["curve_index"], d["start"], d["length"], d["erased"],
                   PixelCoord(*d["a"]), PixelCoord(*d["b"]))


@dataclass
class EvalMetrics:
    pairing_accuracy: float
    mean_deviation: float
    max_deviation: float
    gaps_closed: int
    gaps: int = 0
    correct: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# geometry helpers
# ---------------------------------------------------------------------------

def densify(curve: np.ndarray, spacing: float = 0.2):
    """Resample a polyline at roughly ``spacing``; returns (points, arc positions)."""
    curve = np.asarray(curve, dtype=float)
    seg = np.hypot(*np.diff(curve, axis=0).T)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(2, int(math.ceil(arc[-1] / spacing)) + 1)
    s = np.linspace(0.0, arc[-1], n)
    pts = np.column_stack([np.interp(s, arc, curve[:, 0]), np.interp(s, arc, curve[:, 1])])
    return pts, s


def curve_length(curve) -> float:
    return float(np.hypot(*np.diff(np.asarray(curve, dtype=float), axis=0).T).sum())


def point_at(curve, s: float) -> np.ndarray:
    """Point at arc position ``s`` (wrapped, curves are closed)."""
    curve = np.asarray(curve, dtype=float)
    seg = np.hypot(*np.diff(curve, axis=0).T)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    s = s % arc[-1]
    return np.array([np.interp(s, arc, curve[:, 0]), np.interp(s, arc, curve[:, 1])])


def _pixel_grid(size: int) -> np.ndarray:
    rr, cc = np.mgrid[0:size, 0:size]
    return np.column_stack([rr.ravel(), cc.ravel()]).astype(float)


def height_field(size: int, bumps) -> np.ndarray:
    """Sum of Gaussian bumps given as (row, col, sigma, amplitude)."""
    rr, cc = np.mgrid[0:size, 0:size].astype(float)
    z = np.zeros((size, size))
    for r0, c0, sigma, amp in bumps:
        z += amp * np.exp(-((rr - r0) ** 2 + (cc - c0) ** 2) / (2 * sigma ** 2))
    return z


def _closed_inside(c: np.ndarray, size: int) -> bool:
    return (np.allclose(c[0], c[-1]) and c.min() >= MARGIN and c.max() <= size - 1 - MARGIN
            and curve_length(c) >= MIN_CURVE_LENGTH)


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

def generate_map(seed: int, n_contours: int, size: int = 512, bumps=None,
                 noise: float = NOISE_DENSITY, max_tries: int = 200) -> SyntheticMap:
    """Deterministic synthetic map of ``n_contours`` closed contour rings."""
    if size < 128:
        raise ValueError("size must be at least 128")
    if n_contours < 1:
        raise ValueError("n_contours must be at least 1")
    rng = np.random.default_rng(seed)
    if bumps is None:
        nb = int(rng.integers(2, 5))
        bumps = [(rng.uniform(0.25, 0.75) * size, rng.uniform(0.25, 0.75) * size,
                  rng.uniform(0.08, 0.16) * size, rng.uniform(0.5, 1.0)) for _ in range(nb)]
    z = height_field(size, bumps)
    zmax = float(z.max())

    curves: list[np.ndarray] = []
    trees: list[cKDTree] = []
    for _ in range(max_tries):
        if len(curves) == n_contours:
            break
        level = rng.uniform(0.1, 0.9) * zmax
        cands = [c for c in measure.find_contours(z, level) if _closed_inside(c, size)]
        if not cands:
            continue
        c = cands[int(rng.integers(len(cands)))]
        dense, _ = densify(c, 0.5)
        if any(t.query(dense)[0].min() < MIN_SEPARATION for t in trees):
            continue
        curves.append(c)
        trees.append(cKDTree(dense))
    if len(curves) < n_contours:
        raise HarnessError(f"seed {seed}: found only {len(curves)} of {n_contours} contours")

    stroke = [float(rng.uniform(1.0, 1.5)) for _ in curves]
    return render_map(curves, size, rng, noise, stroke, seed)


def render_map(curves, size: int, rng, noise: float = NOISE_DENSITY, stroke=None,
               seed: int = -1) -> SyntheticMap:
    """Draw closed centrelines as ink strokes and add salt-and-pepper noise.

    ``rng`` is a numpy Generator or a seed. ``stroke`` holds per-curve
    half-widths (default 1.25 px).
    """
    rng = np.random.default_rng(rng)
    curves = [np.asarray(c, dtype=float) for c in curves]
    stroke = list(stroke) if stroke is not None else [1.25] * len(curves)
    ink = render_strokes(size, curves, stroke)
    img = np.full((size, size), BACKGROUND, dtype=np.int32)
    img[ink] = INK
    img += rng.integers(-6, 7, size=img.shape)

    # salt-and-pepper: chosen pixels jump to the opposite extreme; the truth
    # centreline itself is spared so it always stays inked
    centre = centreline_mask(size, curves)
    flip = (rng.random((size, size)) < noise) & ~centre
    img[flip & ink] = 255
    img[flip & ~ink] = 0
    return SyntheticMap(GrayImage(np.clip(img, 0, 255)), curves, seed, stroke, ink)


def centreline_mask(size: int, curves) -> np.ndarray:
    """Pixels hit by rounding dense samples of each curve."""
    centre = np.zeros((size, size), dtype=bool)
    for c in curves:
        pts, _ = densify(c, 0.25)
        rc = np.floor(pts + 0.5).astype(int)
        centre[rc[:, 0], rc[:, 1]] = True
    return centre


def render_strokes(size: int, curves, half_widths) -> np.ndarray:
    """Boolean mask of pixels within each curve's half-width of its centreline."""
    pts, radius = [], []
    for c, hw in zip(curves, half_widths):
        p, _ = densify(c, 0.2)
        pts.append(p)
        radius.append(np.full(len(p), hw))
    pts = np.concatenate(pts)
    radius = np.concatenate(radius)
    d, idx = cKDTree(pts).query(_pixel_grid(size), distance_upper_bound=max(half_widths) + 0.5)
    hit = np.isfinite(d)
    hit[hit] = d[hit] <= radius[idx[hit]]
    return hit.reshape(size, size)


def _curve_index(smap: SyntheticMap):
    """KD-tree over all curves with (curve index, arc position) per sample."""
    pts, cid, arc = [], [], []
    for i, c in enumerate(smap.truth_curves):
        p, s = densify(c, 0.2)
        pts.append(p)
        cid.append(np.full(len(p), i))
        arc.append(s)
    return cKDTree(np.concatenate(pts)), np.concatenate(cid), np.concatenate(arc)


def inject_gaps(smap: SyntheticMap, n_gaps: int, gap_len: float, seed: int,
                max_tries: int = 1000):
    """Erase ``n_gaps`` stroke spans, spread round-robin over the curves.

    Returns ``(broken image, records)``.
    """
    if gap_len < 1:
        raise ValueError("gap_len must be at least 1")
    if n_gaps == 0:
        return smap.image, []
    rng = np.random.default_rng(seed)
    lengths = [curve_length(c) for c in smap.truth_curves]
    per_curve = [0] * len(lengths)
    for g in range(n_gaps):
        per_curve[g % len(lengths)] += 1

    spans: list[tuple[int, float]] = []
    for i, (k, length) in enumerate(zip(per_curve, lengths)):
        if k == 0:
            continue
        # each gap plus its clearance of 3 gap lengths must fit on the curve
        if k * 4 * gap_len > length:
            raise HarnessError(f"curve {i} ({length:.0f} px) cannot host {k} gaps of {gap_len}")
        starts: list[float] = []
        for _ in range(max_tries):
            if len(starts) == k:
                break
            s = float(rng.uniform(0, length))
            if all(_cyclic_clearance(s, t, gap_len, length) >= 3 * gap_len for t in starts):
                starts.append(s)
        if len(starts) < k:
            raise HarnessError(f"could not place {k} gaps on curve {i}")
        spans += [(i, s) for s in sorted(starts)]

    ink = smap.ink if smap.ink is not None else render_strokes(
        smap.image.width, smap.truth_curves, smap.stroke)
    tree, cid, arc = _curve_index(smap)
    rows, cols = np.nonzero(ink)
    _, nearest = tree.query(np.column_stack([rows, cols]).astype(float))
    img = smap.image.data.astype(np.int32)
    clean = ink.copy()
    cuts = []
    for i, s in spans:
        rel = (arc[nearest] - s) % lengths[i]
        hit = (cid[nearest] == i) & (rel <= gap_len)
        img[rows[hit], cols[hit]] = BACKGROUND
        clean[rows[hit], cols[hit]] = False
        cuts.append((i, s, int(hit.sum())))

    # true endpoints: where the noise-free broken stroke's skeleton terminates
    clean = preprocess.median_filter3(BinaryImage(clean))
    skel, _ = skeleton.remove_crossed_points(skeleton.zhang_suen_thin(clean))
    terminals = np.asarray(skeleton.detect_endpoints(skel), dtype=float).reshape(-1, 2)
    term_tree = cKDTree(terminals) if len(terminals) else None
    records = []
    for i, s, erased in cuts:
        back = smap.stroke[i] + ENDPOINT_RETRACTION
        ends = [_snap(point_at(smap.truth_curves[i], t), term_tree, terminals)
                for t in (s - back, s + gap_len + back)]
        records.append(GapRecord(i, s, float(gap_len), erased, *ends))
    return GrayImage(img), records


def _snap(p: np.ndarray, tree, terminals) -> PixelCoord:
    if tree is not None:
        d, j = tree.query(p)
        if d <= SNAP_RADIUS:
            return PixelCoord(*terminals[j].astype(int).tolist())
    return PixelCoord(*np.floor(p + 0.5).astype(int).tolist())


def _cyclic_clearance(s: float, t: float, gap_len: float, length: float) -> float:
    """Arc distance between the spans starting at s and t (each gap_len long)."""
    d = abs(s - t) % length
    d = min(d, length - d)
    return d - gap_len


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------

def _near(p, q) -> bool:
    return max(abs(p[0] - q[0]), abs(p[1] - q[1])) <= 1


def _pair_hits(record: GapRecord, pair) -> bool:
    a, b = pair.a.pos, pair.b.pos
    return ((_near(a, record.a) and _near(b, record.b))
            or (_near(a, record.b) and _near(b, record.a)))


def evaluate(records, pairs, paths, truth_curves) -> EvalMetrics:
    """Score pipeline output against the injected gaps."""
    path_for = {id(p.pair): p for p in paths}
    trees: dict[int, cKDTree] = {}
    correct = 0
    gap_means, worst = [], 0.0
    for rec in records:
        hit = next((p for p in pairs if _pair_hits(rec, p)), None)
        if hit is None:
            continue
        correct += 1
        path = path_for.get(id(hit))
        if path is None or not path.pixels:
            continue
        if rec.curve_index not in trees:
            trees[rec.curve_index] = cKDTree(densify(truth_curves[rec.curve_index], 0.1)[0])
        d, _ = trees[rec.curve_index].query(np.asarray(path.pixels, dtype=float))
        gap_means.append(float(d.mean()))
        worst = max(worst, float(d.max()))
    n = len(records)
    return EvalMetrics(
        pairing_accuracy=correct / n if n else 0.0,
        mean_deviation=float(np.mean(gap_means)) if gap_means else 0.0,
        max_deviation=worst,
        gaps_closed=len(paths),
        gaps=n,
        correct=correct,
    )


def merge_metrics(parts) -> EvalMetrics:
    """Pool per-map metrics in the given order (micro-averaged over gaps)."""
    parts = list(parts)
    gaps = sum(p.gaps for p in parts)
    correct = sum(p.correct for p in parts)
    weighted = sum(p.mean_deviation * p.correct for p in parts)
    return EvalMetrics(
        pairing_accuracy=correct / gaps if gaps else 0.0,
        mean_deviation=weighted / correct if correct else 0.0,
        max_deviation=max((p.max_deviation for p in parts), default=0.0),
        gaps_closed=sum(p.gaps_closed for p in parts),
        gaps=gaps,
        correct=correct,
    )


# ---------------------------------------------------------------------------
# corpus on disk
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusParams:
    size: int = 512
    min_contours: int = 2
    max_contours: int = 4
    gaps_per_contour: int = 2
    min_gap: int = 3
    max_gap: int = 15


def corpus_entry(seed: int, params: CorpusParams = CorpusParams()):
    """Build one corpus map: ``(SyntheticMap, broken image, records)``."""
    rng = np.random.default_rng([seed, 1])
    n = int(rng.integers(params.min_contours, params.max_contours + 1))
    gap_len = int(rng.integers(params.min_gap, params.max_gap + 1))
    smap = generate_map(seed, n, params.size)
    broken, records = inject_gaps(smap, params.gaps_per_contour * n, gap_len, seed)
    return smap, broken, records


def write_corpus(out_dir, seeds, params: CorpusParams = CorpusParams()) -> str:
    """Write PGMs, truth files, and a JSON-lines manifest; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = os.path.join(out_dir, "manifest.jsonl")
    with open(manifest, "w") as mf:
        for seed in seeds:
            smap, broken, records = corpus_entry(seed, params)
            stem = f"map_{seed:04d}"
            save_pgm(os.path.join(out_dir, stem + ".pgm"), broken)
            with open(os.path.join(out_dir, stem + "_truth.json"), "w") as fh:
                json.dump({"curves": [np.round(c, 6).tolist() for c in smap.truth_curves]}, fh)
            entry = {
                "seed": seed,
                "params": asdict(params),
                "image": stem + ".pgm",
                "truth": stem + "_truth.json",
                "records": [r.to_dict() for r in records],
            }
            mf.write(json.dumps(entry, sort_keys=True) + "\n")
    return manifest


def read_manifest(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


@dataclass
class MapOutcome:
    seed: int
    metrics: EvalMetrics
    endpoints_before: int
    endpoints_after: int


def score_map(broken: GrayImage, records, truth_curves, cfg=pipeline.PipelineConfig(),
              seed: int = -1) -> MapOutcome:
    res = pipeline.run(broken, cfg)
    metrics = evaluate(records, res.pairs, res.paths, truth_curves)
    return MapOutcome(seed, metrics, len(skeleton.detect_endpoints(res.skeleton)),
                      len(skeleton.detect_endpoints(res.reconstructed)))


def evaluate_corpus(manifest_path, cfg=pipeline.PipelineConfig()):
    """Run the pipeline over every manifest entry; returns ``(pooled metrics, outcomes)``."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    outcomes = []
    for entry in read_manifest(manifest_path):
        broken = load_pgm(os.path.join(base, entry["image"]))
        with open(os.path.join(base, entry["truth"])) as fh:
            curves = [np.asarray(c) for c in json.load(fh)["curves"]]
        records = [GapRecord.from_dict(r) for r in entry["records"]]
        outcomes.append(score_map(broken, records, curves, cfg, entry["seed"]))
    return merge_metrics(o.metrics for o in outcomes), outcomes
