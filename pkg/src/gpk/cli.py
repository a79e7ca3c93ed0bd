"""Command-line front end: map generation, perturbation studies, fleet
statistics, synthetic data, loss evaluation, and attention self-checks.

Every run writes a JSON manifest next to its outputs; data files are
written atomically (temp + rename) and are byte-reproducible for a fixed
seed regardless of --jobs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import analysis, attention, losses, svg
from .dataio import (
    FrameRecord,
    SceneConfig,
    parse_calibration,
    parse_ground_plane,
    parse_labels,
    serialize_calibration,
    serialize_ground_plane,
    serialize_labels,
    synthesize_scene,
)
from .errors import GpkError, ParseError
from .mapfile import pack_map
from .maps import build_ground_depth_map, build_global_denorm_map, refine_map

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_GEOMETRY = 2

log = logging.getLogger("gpk")


def _setup_logging():
    level = os.environ.get("GPK_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def atomic_write(path, data) -> None:
    """Write bytes or text via a temp file and rename."""
    mode = "wb" if isinstance(data, bytes) else "w"
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, mode) as f:
        f.write(data)
    os.replace(tmp, path)


def _config_digest(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_manifest(out_dir, command, cfg, inputs, outputs, counters, t0) -> None:
    manifest = {
        "command": command,
        "config_digest": _config_digest(cfg),
        "config": cfg,
        "seed": cfg.get("seed"),
        "inputs": sorted(str(p) for p in inputs),
        "outputs": sorted(str(p) for p in outputs),
        "counters": counters,
        "wall_time_s": round(time.monotonic() - t0, 6),
    }
    atomic_write(
        os.path.join(out_dir, "manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )


def _parse_resolution(text: str):
    try:
        h, w = text.lower().split("x")
        h, w = int(h), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None
    if h <= 0 or w <= 0:
        raise argparse.ArgumentTypeError("resolution must be positive")
    return h, w


def _load_config_file(path) -> dict:
    """key=value lines; '#' comments; values parsed as int/float/str."""
    cfg = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError("expected key=value", lineno)
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            for cast in (int, float):
                try:
                    val = cast(val)
                    break
                except ValueError:
                    continue
            cfg[key] = val
    return cfg


def _scene_config(args) -> SceneConfig:
    """SceneConfig from defaults, then config file, then explicit flags."""
    values = {}
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        known = set(SceneConfig.__dataclass_fields__)
        for key, val in file_cfg.items():
            # Ranges are spelled as e.g. pitch_lo = 0.165 / pitch_hi = 0.185.
            base, _, which = key.rpartition("_")
            if key in known:
                values[key] = val
            elif which in ("lo", "hi") and f"{base}_range" in known:
                name = f"{base}_range"
                lo_hi = values.setdefault(
                    name, list(getattr(SceneConfig, name))
                )
                lo_hi[0 if which == "lo" else 1] = float(val)
            else:
                raise ParseError(f"unknown config key {key!r}")
    for name in ("roll_range", "pitch_range", "height_range", "depth_range"):
        if name in values:
            values[name] = tuple(values[name])
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    if getattr(args, "frames", None) is not None:
        values["n_frames"] = args.frames
    if getattr(args, "resolution", None) is not None:
        values["image_height"], values["image_width"] = args.resolution
    return SceneConfig(**values)


def _load_real_frame(args) -> FrameRecord:
    inputs = {"calib": args.calib, "labels": args.labels, "denorm": args.denorm}
    for name, path in inputs.items():
        if path is None:
            raise ParseError(f"--{name} is required when reading real frames")
        if not os.path.exists(path):
            raise ParseError(f"missing {name} file: {path}")
    with open(args.calib) as f:
        rig = parse_calibration(f.read())
    with open(args.labels) as f:
        objects = parse_labels(f.read())
    with open(args.denorm) as f:
        ground = parse_ground_plane(f.read())
    return FrameRecord(
        frame_id="000000", objects=tuple(objects), rig=rig, ground=ground
    )


def _frames_from_args(args):
    """Real single frame if --calib given, else a synthetic fleet."""
    if getattr(args, "calib", None):
        return [_load_real_frame(args)], [args.calib, args.labels, args.denorm]
    return synthesize_scene(_scene_config(args)), []


def _map_blobs(frame: FrameRecord, h: int, w: int, stride: int):
    """Serialized depth/global/refined maps plus refinement counters."""
    k = frame.rig.intrinsics
    if stride > 1:
        k = type(k)(fx=k.fx / stride, fy=k.fy / stride,
                    cx=k.cx / stride, cy=k.cy / stride)
        h, w = max(h // stride, 1), max(w // stride, 1)
    depth = build_ground_depth_map(k, frame.ground, h, w)
    global_map = build_global_denorm_map(frame.ground, h, w)
    refined, stats = refine_map(
        frame.ground, [o.box3d for o in frame.objects], k, h, w
    )
    residual = float(np.mean(np.abs(refined.data - global_map.data)))
    return (
        pack_map(depth.depth, depth.valid),
        pack_map(global_map.data),
        pack_map(refined.data),
        stats,
        residual,
    )


def cmd_gen_maps(args) -> int:
    t0 = time.monotonic()
    frames, inputs = _frames_from_args(args)
    os.makedirs(args.out, exist_ok=True)
    h, w = args.resolution if args.resolution else (512, 928)

    def work(frame):
        return frame.frame_id, _map_blobs(frame, h, w, args.stride)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(work, frames))
    else:
        results = [work(f) for f in frames]

    outputs, report = [], []
    counters = {"frames": len(frames), "insufficient_points": 0,
                "degenerate_skipped": 0}
    for fid, (depth_blob, global_blob, refined_blob, stats, residual) in results:
        for tag, blob in (("depth", depth_blob), ("global", global_blob),
                          ("refined", refined_blob)):
            path = os.path.join(args.out, f"{tag}_{fid}.gpkm")
            atomic_write(path, blob)
            outputs.append(path)
        counters["insufficient_points"] += stats["insufficient_points"]
        counters["degenerate_skipped"] += stats["degenerate_skipped"]
        report.append(f"{fid},{residual!r},{stats['insufficient_points']},"
                      f"{stats['degenerate_skipped']}")
        log.info("frame %s: refinement residual %.3g", fid, residual)
    report_path = os.path.join(args.out, "report.csv")
    atomic_write(
        report_path,
        "frame_id,refined_vs_global_l1,insufficient_points,degenerate_skipped\n"
        + "\n".join(report) + "\n",
    )
    outputs.append(report_path)
    write_manifest(args.out, "gen-maps", _effective_cfg(args), inputs,
                   outputs, counters, t0)
    return EXIT_OK


def _perturbation_pairs(n: int, sigma: float, seed: int):
    rng = np.random.default_rng([seed, 0x9E3779B9])
    draws = rng.normal(0.0, sigma, size=(n, 2)) if sigma > 0 else np.zeros((n, 2))
    draws = np.clip(draws, -3.0 * sigma, 3.0 * sigma)
    return [tuple(row) for row in draws]


def cmd_perturb(args) -> int:
    t0 = time.monotonic()
    if args.sigma < 0:
        raise ParseError("--sigma must be >= 0")
    frames, inputs = _frames_from_args(args)
    os.makedirs(args.out, exist_ok=True)
    seed = args.seed if args.seed is not None else 0
    pairs = _perturbation_pairs(len(frames), args.sigma, seed)
    quantities = ([args.quantity] if args.quantity else list(analysis.QUANTITIES))
    outputs, overlaps = [], {}
    for q in quantities:
        clean = analysis.v_correlation_series(frames, q)
        pert = analysis.v_correlation_series(frames, q, perturb=pairs)
        overlaps[q] = analysis.overlap_coefficient(clean, pert)
        for series in (clean, pert):
            path = os.path.join(args.out, f"scatter_{q}_{series.condition}.csv")
            atomic_write(path, series.to_csv())
            outputs.append(path)
        plot = svg.scatter_svg(
            [("clean", clean.v, clean.values), ("perturbed", pert.v, pert.values)],
            title=f"{q} vs image row",
        )
        path = os.path.join(args.out, f"scatter_{q}.svg")
        atomic_write(path, plot)
        outputs.append(path)
    overlap_path = os.path.join(args.out, "overlap.csv")
    atomic_write(
        overlap_path,
        "quantity,overlap\n"
        + "".join(f"{q},{overlaps[q]!r}\n" for q in quantities),
    )
    outputs.append(overlap_path)
    for q in quantities:
        print(f"overlap({q}) = {overlaps[q]:.6f}")
    if set(("depth", "roll", "pitch")) <= set(quantities):
        ordering = (overlaps["pitch"] > overlaps["depth"]
                    and overlaps["roll"] > overlaps["depth"])
        print(f"attitude-over-depth ordering holds: {ordering}")
    write_manifest(args.out, "perturb", _effective_cfg(args), inputs, outputs,
                   {"frames": len(frames)}, t0)
    return EXIT_OK


def cmd_stats(args) -> int:
    t0 = time.monotonic()
    frames, inputs = _frames_from_args(args)
    os.makedirs(args.out, exist_ok=True)
    depth_hist = analysis.depth_histogram(frames, args.bins)
    roll_hist, pitch_hist, height_hist = analysis.attitude_histograms(
        frames, args.bins, stride=args.stride if args.stride > 1 else 16
    )
    outputs = []
    for name, hist in (("depth", depth_hist), ("roll", roll_hist),
                       ("pitch", pitch_hist), ("height", height_hist)):
        path = os.path.join(args.out, f"hist_{name}.csv")
        atomic_write(path, hist.to_csv())
        outputs.append(path)
        print(f"{name}: relative support {hist.relative_support():.6f}")
    ratio = depth_hist.relative_support() / pitch_hist.relative_support()
    print(f"depth/pitch relative-support ratio: {ratio:.3f}")
    write_manifest(args.out, "stats", _effective_cfg(args), inputs, outputs,
                   {"frames": len(frames)}, t0)
    return EXIT_OK


def cmd_synth(args) -> int:
    t0 = time.monotonic()
    frames = synthesize_scene(_scene_config(args))
    os.makedirs(args.out, exist_ok=True)

    def work(frame):
        return frame.frame_id, (
            serialize_labels(frame.objects),
            serialize_calibration(frame.rig),
            serialize_ground_plane(frame.ground),
        )

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(work, frames))
    else:
        results = [work(f) for f in frames]
    outputs = []
    for fid, (labels_txt, calib_txt, denorm_txt) in results:
        for tag, text in (("label", labels_txt), ("calib", calib_txt),
                          ("denorm", denorm_txt)):
            path = os.path.join(args.out, f"{tag}_{fid}.txt")
            atomic_write(path, text)
            outputs.append(path)
    write_manifest(args.out, "synth", _effective_cfg(args), [], outputs,
                   {"frames": len(frames)}, t0)
    print(f"wrote {len(frames)} frames to {args.out}")
    return EXIT_OK


def _frame_loss_components(pred, gt, denorm_l1: float) -> dict:
    if len(pred) != len(gt):
        raise ParseError(
            f"prediction/label object counts differ: {len(pred)} vs {len(gt)}"
        )
    comps = dict.fromkeys(losses.COMPONENT_NAMES, 0.0)
    for p, g in zip(pred, gt):
        comps["classification"] += 0.0 if p.category == g.category else 1.0
        comps["size2d"] += sum(
            losses.l1_loss(a, b)[0] for a, b in zip(p.box2d, g.box2d)
        )
        comps["center3d"] += sum(
            losses.l1_loss(a, b)[0]
            for a, b in zip(
                (p.box3d.x, p.box3d.y, p.box3d.z),
                (g.box3d.x, g.box3d.y, g.box3d.z),
            )
        )
        comps["giou"] += losses.giou_loss_2d(p.box2d, g.box2d)
        comps["size3d"] += sum(
            losses.l1_loss(a, b)[0]
            for a, b in zip(
                (p.box3d.l, p.box3d.w, p.box3d.h),
                (g.box3d.l, g.box3d.w, g.box3d.h),
            )
        )
        comps["angle"] += losses.angle_loss(p.box3d.theta, g.box3d.theta)[0]
        comps["depth"] += losses.laplace_depth_loss(p.box3d.z, g.box3d.z, 1.0)[0]
    if pred:
        for key in comps:
            comps[key] /= len(pred)
    comps["denorm"] = denorm_l1
    return comps


def cmd_losses(args) -> int:
    for name, path in (("pred", args.pred), ("labels", args.labels)):
        if not os.path.exists(path):
            raise ParseError(f"missing {name} file: {path}")
    with open(args.pred) as f:
        pred = parse_labels(f.read())
    with open(args.labels) as f:
        gt = parse_labels(f.read())
    denorm_l1 = 0.0
    if args.pred_denorm or args.denorm:
        if not (args.pred_denorm and args.denorm):
            raise ParseError("need both --pred-denorm and --denorm")
        with open(args.pred_denorm) as f:
            gp = parse_ground_plane(f.read())
        with open(args.denorm) as f:
            gg = parse_ground_plane(f.read())
        denorm_l1 = float(np.mean(np.abs(gp.params() - gg.params())))
    comps = _frame_loss_components(pred, gt, denorm_l1)
    total = losses.total_loss(comps)
    for name in losses.COMPONENT_NAMES:
        print(f"{name}: {comps[name]:.6f}")
    print(f"total: {total:.6f}")
    return EXIT_OK


def _attention_checks(seed: int):
    """(name, passed) pairs for the attention invariant suite."""
    rng = np.random.default_rng(seed)
    n, tg, tv, c, h = 8, 12, 20, 16, 4
    q = attention.QuerySet(rng.standard_normal((n, c)))
    fg = attention.FeatureSequence(rng.standard_normal((tg, c)),
                                   attention.ROLE_GROUND)
    fv = attention.FeatureSequence(rng.standard_normal((tv, c)),
                                   attention.ROLE_VISUAL)
    blocks = [attention.DecoderWeights.create(c, h, seed + 1 + i)
              for i in range(3)]
    out1, amap1 = attention.decoder_stack(q, fg, fv, blocks)
    out2, amap2 = attention.decoder_stack(q, fg, fv, blocks)
    row_sums = amap1.weights.sum(axis=1)
    perm = rng.permutation(n)
    out_p, amap_p = attention.decoder_stack(
        attention.QuerySet(q.queries[perm]), fg, fv, blocks
    )
    sa = attention.self_attention(fv, blocks[0].self_attn)
    tperm = rng.permutation(tv)
    sa_p = attention.self_attention(
        attention.FeatureSequence(fv.tokens[tperm], attention.ROLE_VISUAL),
        blocks[0].self_attn,
    )
    return [
        ("attention rows sum to 1", bool(np.max(np.abs(row_sums - 1.0)) <= 1e-9)),
        ("entries in [0, 1]",
         bool(np.all(amap1.weights >= 0) and np.all(amap1.weights <= 1))),
        ("query permutation equivariance",
         bool(np.max(np.abs(out_p.queries - out1.queries[perm])) <= 1e-9
              and np.max(np.abs(amap_p.weights - amap1.weights[perm])) <= 1e-9)),
        ("token permutation equivariance",
         bool(np.max(np.abs(sa_p.tokens - sa.tokens[tperm])) <= 1e-9)),
        ("3-block stack finite N x C",
         bool(out1.queries.shape == (n, c)
              and np.all(np.isfinite(out1.queries)))),
        ("bit-identical repeated runs",
         bool(np.array_equal(out1.queries, out2.queries)
              and np.array_equal(amap1.weights, amap2.weights))),
    ]


def cmd_check_attn(args) -> int:
    seed = args.seed if args.seed is not None else 0
    checks = _attention_checks(seed)
    failed = 0
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        failed += not ok
    fixture = attention.decoder_fixture(8, 12, 20, 16, 4, seed)
    print(f"fixture digests: {fixture['digests']}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        atomic_write(os.path.join(args.out, "attention_fixture.json"),
                     attention.fixture_json(fixture))
    return EXIT_OK if failed == 0 else EXIT_GEOMETRY


def _effective_cfg(args) -> dict:
    cfg = {k: v for k, v in vars(args).items()
           if k not in ("func",) and v is not None}
    cfg["seed"] = getattr(args, "seed", None) or 0
    return cfg


def _add_common(p, with_inputs=True):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="master RNG seed")
    p.add_argument("--config", default=None,
                   help="key=value config file (flags win)")
    p.add_argument("--jobs", type=int, default=1,
                   help="frame-level worker threads")
    p.add_argument("--frames", type=int, default=None,
                   help="synthetic frame count")
    if with_inputs:
        p.add_argument("--calib", default=None, help="calibration file")
        p.add_argument("--labels", default=None, help="label file")
        p.add_argument("--denorm", default=None, help="ground-plane file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpk",
        description="Ground-plane prior toolkit for roadside monocular "
        "3D detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-maps", help="write depth/global/refined maps")
    _add_common(p)
    p.add_argument("--resolution", type=_parse_resolution, default=None,
                   help="map size HxW (default 512x928)")
    p.add_argument("--stride", type=int, choices=(1, 16), default=1)
    p.set_defaults(func=cmd_gen_maps)

    p = sub.add_parser("perturb", help="pose-perturbation overlap study")
    _add_common(p)
    p.add_argument("--sigma", type=float, default=0.3,
                   help="roll/pitch offset std dev (radians)")
    p.add_argument("--quantity", choices=analysis.QUANTITIES, default=None)
    p.add_argument("--resolution", type=_parse_resolution, default=None)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("stats", help="fleet depth/attitude histograms")
    _add_common(p)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--stride", type=int, choices=(1, 16), default=16)
    p.add_argument("--resolution", type=_parse_resolution, default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="write synthetic label/calib/denorm files")
    _add_common(p, with_inputs=False)
    p.add_argument("--resolution", type=_parse_resolution, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("losses", help="evaluate losses between two label files")
    p.add_argument("--pred", required=True, help="predicted label file")
    p.add_argument("--labels", required=True, help="ground-truth label file")
    p.add_argument("--pred-denorm", default=None)
    p.add_argument("--denorm", default=None)
    p.set_defaults(func=cmd_losses)

    p = sub.add_parser("check-attn", help="run attention invariant suite")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None,
                   help="optional directory for the JSON fixture")
    p.set_defaults(func=cmd_check_attn)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (GpkError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY


if __name__ == "__main__":
    sys.exit(main())
