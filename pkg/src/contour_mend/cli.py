"""``contour-mend`` command line.

Settings resolve as built-in defaults < config file < flags. The config file
is ``key = value`` lines (``#`` comments) naming PipelineConfig fields; it
comes from ``--config`` or, failing that, ``$CONTOUR_MEND_CONFIG``.

Exit codes: 0 success (unmatched endpoints are reported, not an error),
2 I/O failure, 3 malformed input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import glyphs, harness, matcher, pipeline, preprocess, skeleton
from .reconnect import apply_reconnection
from .raster import (NetpbmError, PixelCoord, load_pbm, load_pgm, save_pbm, save_pgm)

log = logging.getLogger("contour_mend")

EXIT_OK, EXIT_IO, EXIT_MALFORMED = 0, 2, 3
CONFIG_ENV = "CONTOUR_MEND_CONFIG"

_FIELD_TYPES = {
    "threshold": lambda v: None if v.strip().lower() == "auto" else int(v),
    "median_passes": int,
    "window": int,
    "max_gap": float,
    "tail_k": int,
    "sample_step": float,
    "gradient_source": str,
    "dump_stages": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
}


class InputError(Exception):
    """Malformed user input (maps to exit code 3)."""


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise InputError(f"config line {lineno}: unknown key {key!r}")
        try:
            out[key] = _FIELD_TYPES[key](value)
        except ValueError as exc:
            raise InputError(f"config line {lineno}: bad value for {key}: {value!r}") from exc
    return out


def resolve_config(args) -> pipeline.PipelineConfig:
    values: dict = {}
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if path:
        with open(path) as fh:
            values.update(parse_config_text(fh.read()))
    for key in _FIELD_TYPES:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if isinstance(values.get("threshold"), str):
        values["threshold"] = _FIELD_TYPES["threshold"](values["threshold"])
    try:
        return pipeline.PipelineConfig(**values)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _dump_json(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_pipeline(args) -> int:
    cfg = resolve_config(args)
    img = load_pgm(args.input)
    res = pipeline.run(img, cfg)
    save_pbm(args.output, res.reconstructed)
    _dump_json(res.report(timings=args.timings, debug_paths=args.debug_paths), args.report)
    if args.overlay:
        save_pgm(args.overlay, pipeline.overlay(res))
    if cfg.dump_stages:
        stem = args.dump_dir or os.path.splitext(args.output)[0] + "_stages"
        os.makedirs(stem, exist_ok=True)
        save_pbm(os.path.join(stem, "1_binary.pbm"), res.binary)
        save_pbm(os.path.join(stem, "2_thinned.pbm"), res.thinned)
        save_pbm(os.path.join(stem, "3_skeleton.pbm"), res.skeleton)
        save_pgm(os.path.join(stem, "4_overlay.pgm"), pipeline.overlay(res))
    if res.unmatched:
        log.warning("%d endpoint(s) left unmatched", len(res.unmatched))
    return EXIT_OK


def cmd_threshold(args) -> int:
    cfg = resolve_config(args)
    img = load_pgm(args.input)
    binary, m = preprocess.binarize(img, cfg.threshold, cfg.median_passes)
    save_pbm(args.output, binary)
    log.info("threshold %d", m)
    return EXIT_OK


def cmd_thin(args) -> int:
    img = load_pbm(args.input)
    out = skeleton.zhang_suen_thin(img)
    if not args.keep_crossed:
        out, crossed = skeleton.remove_crossed_points(out)
        log.info("removed %d crossed point(s)", len(crossed))
    save_pbm(args.output, out)
    return EXIT_OK


def cmd_endpoints(args) -> int:
    skel = load_pbm(args.input)
    source = load_pbm(args.gradient_image).to_gray() if args.gradient_image else None
    eps = matcher.describe_endpoints(skel, skeleton.detect_endpoints(skel), source)
    _dump_json({"version": pipeline.REPORT_VERSION, "endpoints": [e.to_dict() for e in eps]},
               args.output)
    return EXIT_OK


def cmd_match(args) -> int:
    cfg = resolve_config(args)
    doc = _load_json(args.input)
    try:
        eps = [skeleton.Endpoint.from_dict(d) for d in doc["endpoints"]]
    except (KeyError, TypeError) as exc:
        raise InputError(f"{args.input}: not an endpoint list") from exc
    pairs, unmatched = matcher.match_endpoints(eps, cfg.match_config)
    _dump_json({
        "version": pipeline.REPORT_VERSION,
        "pairs": [p.to_dict() for p in pairs],
        "unmatched": [[int(e.pos.row), int(e.pos.col)] for e in unmatched],
    }, args.output)
    return EXIT_OK


def cmd_reconnect(args) -> int:
    cfg = resolve_config(args)
    skel = load_pbm(args.skeleton)
    doc = _load_json(args.pairs)
    try:
        pairs = [matcher.MatchPair(skeleton.Endpoint(PixelCoord(*p["a"])),
                                   skeleton.Endpoint(PixelCoord(*p["b"])),
                                   float(p.get("distance", 0.0)), p.get("phase", matcher.GLOBAL))
                 for p in doc["pairs"]]
    except (KeyError, TypeError) as exc:
        raise InputError(f"{args.pairs}: not a pair list") from exc
    paths = pipeline.bridge(skel, pairs, cfg.tail_k, cfg.sample_step)
    save_pbm(args.output, apply_reconnection(skel, paths))
    return EXIT_OK


def cmd_glyph(args) -> int:
    glyph = glyphs.crop_to_ink(load_pbm(args.input))
    templates = None
    if args.templates:
        with open(args.templates) as fh:
            templates = glyphs.load_templates(fh.read())
    profile = glyphs.zone_features(glyph)
    digit, score = glyphs.classify_digit(profile, templates)
    _dump_json({"digit": digit, "score": score, "counts": list(profile.counts)}, args.output)
    return EXIT_OK


def cmd_synth(args) -> int:
    params = harness.CorpusParams(size=args.size, gaps_per_contour=args.gaps_per_contour,
                                  max_gap=args.max_gap_len)
    seeds = range(args.seed, args.seed + args.count)
    manifest = harness.write_corpus(args.out, seeds, params)
    log.info("wrote %s", manifest)
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    metrics, outcomes = harness.evaluate_corpus(args.manifest, cfg)
    doc = {
        "version": pipeline.REPORT_VERSION,
        "metrics": metrics.to_dict(),
        "maps": [{"seed": o.seed, "endpoints_before": o.endpoints_before,
                  "endpoints_after": o.endpoints_after, **o.metrics.to_dict()}
                 for o in outcomes],
    }
    _dump_json(doc, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _config_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("pipeline settings")
    g.add_argument("--config", help=f"key=value config file (default: ${CONFIG_ENV})")
    g.add_argument("--threshold", help="intensity threshold or 'auto'")
    g.add_argument("--median-passes", dest="median_passes", type=int)
    g.add_argument("--window", type=int, help="windowed matching size (odd)")
    g.add_argument("--max-gap", dest="max_gap", type=float)
    g.add_argument("--tail-k", dest="tail_k", type=int)
    g.add_argument("--sample-step", dest="sample_step", type=float)
    g.add_argument("--gradient-source", dest="gradient_source", choices=("skeleton", "binary"))
    g.add_argument("--dump-stages", dest="dump_stages", action="store_const", const=True)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contour-mend",
                                     description="Reconnect broken contour lines in scanned maps.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    cfg = _config_flags()

    p = sub.add_parser("pipeline", parents=[cfg], help="run every stage on a PGM scan")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="reconstructed skeleton (PBM)")
    p.add_argument("-r", "--report", required=True, help="run report (JSON)")
    p.add_argument("--overlay", help="debug overlay (PGM)")
    p.add_argument("--dump-dir", help="directory for --dump-stages output")
    p.add_argument("--timings", action="store_true", help="include stage timings in the report")
    p.add_argument("--debug-paths", action="store_true", help="include path samples and pixels")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("threshold", parents=[cfg], help="binarize and median-filter a PGM")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("thin", help="thin a PBM and delete crossed points")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--keep-crossed", action="store_true")
    p.set_defaults(func=cmd_thin)

    p = sub.add_parser("endpoints", help="list skeleton endpoints as JSON")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--gradient-image", help="PBM to take Sobel gradients from")
    p.set_defaults(func=cmd_endpoints)

    p = sub.add_parser("match", parents=[cfg], help="pair endpoints from an endpoints JSON")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("reconnect", parents=[cfg], help="bridge matched pairs on a skeleton")
    p.add_argument("skeleton")
    p.add_argument("pairs")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_reconnect)

    p = sub.add_parser("glyph", help="classify an isolated digit glyph (PBM)")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--templates", help="template rows: digit followed by 9 zone values")
    p.set_defaults(func=cmd_glyph)

    p = sub.add_parser("synth", help="write a synthetic corpus")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--gaps-per-contour", type=int, default=2)
    p.add_argument("--max-gap-len", type=int, default=15)
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", parents=[cfg], help="score the pipeline on a corpus manifest")
    p.add_argument("manifest")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (NetpbmError, InputError, harness.HarnessError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
