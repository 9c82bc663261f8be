"""Command-line front end: explain inputs, run evaluations, render artifacts.

Exit codes: 0 success, 1 usage error, 2 scorer error, 3 I/O error. Option
precedence: command-line flags, then a --config JSON file, then built-in
defaults. PAMI_LOG sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import engine
from .mapfile import MapFormatError, read_map, write_map
from .masking import DEFAULT_KERNEL_SIZE, DEFAULT_SIGMA, MaskStyle
from .metrics import GroundTruthRegion, hit_rate, insertion, pointing_game
from .render import (
    colorize_map,
    load_image_png,
    render_heatmap,
    render_segments,
    save_png,
    segment_counts,
)
from .scorers import ScoringError, build_scorer, parse_scorer_arg
from .segmentation import SegmenterConfig, segment
from .text import explain_tokens, partition_tokens
from .types import WindowConfig, argmax_class

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCORER = 2
EXIT_IO = 3

log = logging.getLogger("pami.cli")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path) -> dict:
    if path is None:
        return {}
    config = json.loads(Path(path).read_text())
    if not isinstance(config, dict):
        raise UsageError("--config must contain a JSON object")
    return config


def _resolve(args, config: dict, name: str, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return config.get(name, default)


def _mask_style(args, config) -> MaskStyle:
    return MaskStyle(
        _resolve(args, config, "mask", "blurred"),
        int(_resolve(args, config, "kernel_size", DEFAULT_KERNEL_SIZE)),
        float(_resolve(args, config, "sigma", DEFAULT_SIGMA)),
    )


def _explain_options(args, config) -> dict:
    strategy = _resolve(args, config, "strategy", "segment")
    options = {
        "strategy": strategy,
        "class_id": _resolve(args, config, "class_id", None),
        "style": _mask_style(args, config),
        "max_in_flight": int(_resolve(args, config, "max_in_flight", 8)),
    }
    if strategy == "window":
        options["window"] = WindowConfig(
            _resolve(args, config, "window_shape", "circle"),
            int(_resolve(args, config, "radius", 40)),
            int(_resolve(args, config, "step", 6)),
        )
    else:
        options["runs"] = int(_resolve(args, config, "runs", 2))
        options["include_seeds"] = bool(_resolve(args, config, "seeds", False))
    return options


def _cleanup(paths) -> None:
    for path in paths:
        try:
            Path(path).unlink()
        except OSError:
            pass


def cmd_explain(args) -> int:
    config = _load_config(args.config)
    scorer_arg = _resolve(args, config, "scorer", None)
    if scorer_arg is None:
        raise UsageError("--scorer is required")
    if (args.image is None) == (args.text is None):
        raise UsageError("exactly one of --image or --text is required")
    out_dir = Path(_resolve(args, config, "out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    options = _explain_options(args, config)
    written: list[Path] = []
    scorer = build_scorer(parse_scorer_arg(scorer_arg))
    try:
        with scorer:
            if args.text is not None:
                return _explain_text(args.text, scorer, options, out_dir, written)
            return _explain_image(Path(args.image), scorer, options, out_dir, written)
    except BaseException:
        _cleanup(written)
        raise


def _explain_image(image_path, scorer, options, out_dir, written) -> int:
    img = load_image_png(image_path)
    start = time.perf_counter()
    result = engine.explain(img, scorer, **options)
    wall = time.perf_counter() - start
    stem = image_path.stem
    map_path = out_dir / f"{stem}.map"
    written.append(map_path)
    write_map(map_path, result.map)
    heat_path = out_dir / f"{stem}.heatmap.png"
    written.append(heat_path)
    save_png(render_heatmap(img, result.map), heat_path)
    meta = result.metadata()
    meta.update({"image": str(image_path), "wall_time_s": round(wall, 3)})
    meta_path = out_dir / f"{stem}.meta.json"
    written.append(meta_path)
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    print(f"wrote {map_path}, {heat_path}, {meta_path} "
          f"(class {result.class_id}, {result.scorer_calls} scorer calls)")
    return EXIT_OK


def _explain_text(text, scorer, options, out_dir, written) -> int:
    seq = partition_tokens(text)
    class_id = options["class_id"]
    if class_id is None:
        class_id = argmax_class(scorer.score_text(" ".join(seq.tokens)))
    start = time.perf_counter()
    importance = explain_tokens(seq, scorer, class_id, options["max_in_flight"])
    wall = time.perf_counter() - start
    payload = {
        "tokens": list(seq.tokens),
        "importance": importance,
        "class": class_id,
        "mask_token": seq.mask_token,
        "scorer_calls": len(seq),
        "wall_time_s": round(wall, 3),
    }
    out_path = out_dir / "tokens.json"
    written.append(out_path)
    out_path.write_text(json.dumps(payload, indent=2) + "\n")
    print(f"wrote {out_path} (class {class_id}, {len(seq)} tokens)")
    return EXIT_OK


def _ground_truth(entry: dict) -> GroundTruthRegion:
    class_id = int(entry["class"])
    if "bbox" in entry:
        x0, y0, x1, y1 = entry["bbox"]
        return GroundTruthRegion.from_bbox(int(x0), int(y0), int(x1), int(y1), class_id)
    if "mask" in entry:
        mask_img = load_image_png(entry["mask"])
        return GroundTruthRegion.from_mask(mask_img.data.max(axis=2) > 0.5, class_id)
    raise UsageError(f"manifest entry for {entry.get('image')} has no bbox or mask")


def cmd_eval(args) -> int:
    config = _load_config(args.config)
    scorer_arg = _resolve(args, config, "scorer", None)
    if scorer_arg is None:
        raise UsageError("--scorer is required")
    manifest_path = _resolve(args, config, "manifest", None)
    if manifest_path is None:
        raise UsageError("--manifest is required")
    manifest = json.loads(Path(manifest_path).read_text())
    if not isinstance(manifest, list) or not manifest:
        raise UsageError("manifest must be a non-empty JSON list")
    out_dir = Path(_resolve(args, config, "out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    options = _explain_options(args, config)
    steps = int(_resolve(args, config, "steps", 100))
    workers = int(_resolve(args, config, "workers", 1))
    spec = parse_scorer_arg(scorer_arg)

    local = threading.local()
    scorers = []
    lock = threading.Lock()

    def _worker_scorer():
        scorer = getattr(local, "scorer", None)
        if scorer is None:
            scorer = build_scorer(spec)
            local.scorer = scorer
            with lock:
                scorers.append(scorer)
        return scorer

    def _eval_one(index: int, entry: dict) -> dict:
        image_id = entry.get("id", Path(entry["image"]).stem)
        scorer = _worker_scorer()
        img = load_image_png(entry["image"])
        gt = _ground_truth(entry)
        result = engine.explain(img, scorer, class_id=gt.class_id, **{
            k: v for k, v in options.items() if k != "class_id"})
        hit = pointing_game(result.map, gt)
        curve = insertion(img, result.map, scorer, gt.class_id, steps=steps,
                          style=options["style"])
        return {
            "image_id": image_id,
            "class": gt.class_id,
            "hit": bool(hit),
            "auc": curve.auc,
            "curve": {
                "fractions": curve.fractions.tolist(),
                "probabilities": curve.probabilities.tolist(),
            },
        }

    records: list[dict] = [None] * len(manifest)
    failures = 0
    try:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            futures = [pool.submit(_eval_one, i, entry)
                       for i, entry in enumerate(manifest)]
            for i, future in enumerate(futures):
                try:
                    records[i] = future.result()
                except Exception as err:  # noqa: BLE001 - per-image isolation
                    log.warning("image %d failed: %s", i, err)
                    failures += 1
                    records[i] = {
                        "image_id": manifest[i].get("id", str(i)),
                        "error": str(err),
                    }
    finally:
        for scorer in scorers:
            scorer.close()
    ok = [r for r in records if "error" not in r]
    if not ok:
        raise ScoringError("every manifest entry failed")
    summary = {
        "hit_rate": hit_rate([(r["class"], r["hit"]) for r in ok]),
        "mean_auc": float(np.mean([r["auc"] for r in ok])),
        "images": len(manifest),
        "failures": failures,
        "partial": failures > 0,
    }
    (out_dir / "records.json").write_text(json.dumps(records, indent=2) + "\n")
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return EXIT_OK


def cmd_render(args) -> int:
    imap = read_map(args.map)
    out = Path(args.out) if args.out else Path(args.map).with_suffix(".png")
    if args.image:
        save_png(render_heatmap(load_image_png(args.image), imap), out)
    else:
        save_png(colorize_map(imap), out)
    print(f"wrote {out}")
    return EXIT_OK


_SEGMENT_DEFAULTS = {
    "felzenszwalb": {"scale": 100.0, "sigma": 0.8, "min_size": 20},
    "slic": {"n_segments": 50, "compactness": 20.0},
    "watershed": {"markers": 20, "compactness": 0.0001},
    "seeds": {"num_superpixels": 20, "num_levels": 5, "n_iter": 10},
}

_SEGMENT_FLAGS = {
    "scale": "scale", "sigma": "sigma", "min_size": "min_size",
    "n_segments": "n_segments", "compactness": "compactness",
    "markers": "markers", "num_superpixels": "num_superpixels",
    "num_levels": "num_levels", "n_iter": "n_iter",
}


def cmd_segments(args) -> int:
    params = dict(_SEGMENT_DEFAULTS[args.algorithm])
    for key in params:
        value = getattr(args, _SEGMENT_FLAGS[key], None)
        if value is not None:
            params[key] = value
    cfg = SegmenterConfig(args.algorithm, params)
    img = load_image_png(args.image)
    seg = segment(img, cfg)
    out = Path(args.out) if args.out else Path(args.image).with_suffix(".segments.png")
    save_png(render_segments(seg), out)
    sidecar = out.with_suffix(".txt")
    lines = [f"{label} {count}" for label, count in segment_counts(seg)]
    sidecar.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} and {sidecar} ({seg.num_parts} segments, {cfg.describe()})")
    return EXIT_OK


def _add_common_explain_flags(sub):
    sub.add_argument("--scorer", help='scorer locator: stdio:"<command>" or http://host:port')
    sub.add_argument("--strategy", choices=("window", "segment"))
    sub.add_argument("--class", dest="class_id", type=int)
    sub.add_argument("--window-shape", dest="window_shape", choices=("circle", "rectangle"))
    sub.add_argument("--radius", type=int)
    sub.add_argument("--step", type=int)
    sub.add_argument("--mask", choices=("blurred", "black", "white"))
    sub.add_argument("--kernel-size", dest="kernel_size", type=int)
    sub.add_argument("--sigma", type=float)
    sub.add_argument("--runs", type=int, choices=(1, 2))
    sub.add_argument("--seeds", dest="seeds", action="store_const", const=True)
    sub.add_argument("--config", help="JSON file of defaults for any flag")
    sub.add_argument("--out-dir", dest="out_dir")
    sub.add_argument("--max-in-flight", dest="max_in_flight", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pami", description=__doc__)
    subs = parser.add_subparsers(dest="command")

    p_explain = subs.add_parser("explain", help="explain one image or sentence")
    p_explain.add_argument("--image", help="input image (PNG/JPEG)")
    p_explain.add_argument("--text", help="input sentence")
    _add_common_explain_flags(p_explain)
    p_explain.set_defaults(func=cmd_explain)

    p_eval = subs.add_parser("eval", help="pointing game + insertion over a manifest")
    p_eval.add_argument("--manifest", help="JSON list of {image, class, bbox|mask}")
    p_eval.add_argument("--steps", type=int, help="insertion curve stages")
    p_eval.add_argument("--workers", type=int, help="parallel image evaluations")
    _add_common_explain_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_render = subs.add_parser("render", help="colorize a saved importance map")
    p_render.add_argument("--map", required=True)
    p_render.add_argument("--image", help="blend the heatmap over this image")
    p_render.add_argument("--out")
    p_render.set_defaults(func=cmd_render)

    p_seg = subs.add_parser("segments", help="dump one segmentation as a PNG")
    p_seg.add_argument("--image", required=True)
    p_seg.add_argument("--algorithm", required=True,
                       choices=("felzenszwalb", "slic", "watershed", "seeds"))
    p_seg.add_argument("--scale", type=float)
    p_seg.add_argument("--sigma", type=float)
    p_seg.add_argument("--min-size", dest="min_size", type=int)
    p_seg.add_argument("--n-segments", dest="n_segments", type=int)
    p_seg.add_argument("--compactness", type=float)
    p_seg.add_argument("--markers", type=int)
    p_seg.add_argument("--num-superpixels", dest="num_superpixels", type=int)
    p_seg.add_argument("--num-levels", dest="num_levels", type=int)
    p_seg.add_argument("--n-iter", dest="n_iter", type=int)
    p_seg.add_argument("--out")
    p_seg.set_defaults(func=cmd_segments)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("PAMI_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_help()
            return EXIT_USAGE
        return args.func(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ScoringError as err:
        context = f" ({err.context})" if err.context else ""
        print(f"scorer error: {err}{context}", file=sys.stderr)
        return EXIT_SCORER
    except MapFormatError as err:
        print(f"map format error: {err}", file=sys.stderr)
        return EXIT_IO
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
