"""``bodyface`` command line: detect, eval, train-skin, synth, bench.

Data goes to files (and the summary table / counts to stdout); diagnostics
go to stderr.  Exit status is 0 on success, 2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import bfd, evaluation, io, plot, skin, synth
from .bench import bench_timing, bfd_pipeline, scaling_sweep
from .geometry import ImageSize, InvalidBoxError


class CliError(Exception):
    pass


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _existing(path: str) -> str:
    if not os.path.exists(path):
        raise argparse.ArgumentTypeError(f"{path} does not exist")
    return path


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_bfd_flags(p: argparse.ArgumentParser) -> None:
    d = bfd.DEFAULT_CONFIG
    p.add_argument("--joint-conf", type=float, default=d.joint_confidence_threshold,
                   help="minimum face-joint confidence (default %(default)s)")
    p.add_argument("--box-min", type=float, default=d.box_min, help="smallest face box side (default %(default)s)")
    p.add_argument("--box-max", type=float, default=d.box_max, help="largest face box side (default %(default)s)")
    p.add_argument("--box-alpha", type=float, default=d.box_scale_alpha,
                   help="box side / largest face-joint distance (default %(default)s)")
    p.add_argument("--frontal-asym", type=float, default=d.frontal_asymmetry_max,
                   help="largest eye-ear asymmetry still called frontal (default %(default)s)")


def _bfd_config(args) -> bfd.BfdConfig:
    try:
        return bfd.BfdConfig(args.joint_conf, args.box_min, args.box_max, args.box_alpha, args.frontal_asym)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _parallel_map(fn, items, parallel: int):
    if parallel <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * parallel))))


# -- detect -----------------------------------------------------------------

class _DetectJob:
    """Picklable per-image work unit."""

    def __init__(self, cfg, images_dir, model, skip_missing):
        self.cfg = cfg
        self.images_dir = images_dir
        self.model = model
        self.skip_missing = skip_missing

    def __call__(self, doc: io.KeypointDocument):
        dets = bfd.detect_faces(doc.people, self.cfg)
        warning = None
        if self.model is not None and dets:
            images = io.ImageDirectory(self.images_dir)
            try:
                image = images.load(doc.image_id)
            except skin.ImageUnavailableError as exc:
                if not self.skip_missing:
                    return doc.image_id, None, str(exc)
                return doc.image_id, dets, f"skin gate skipped: {exc}"
            kept = []
            for d in dets:
                try:
                    g = skin.skin_gate(d, image, self.model)
                except InvalidBoxError:
                    g = None
                if g is not None:
                    kept.append(g)
            dets = kept
        return doc.image_id, dets, warning


def cmd_detect(args) -> int:
    cfg = _bfd_config(args)
    docs = io.read_keypoints_path(args.keypoints)
    model = None
    if args.skin_model and args.images:
        model = skin.load_skin_model(args.skin_model)
    elif args.skin_model or args.images:
        _log("note: skin gate needs both --images and --skin-model; running without it")

    job = _DetectJob(cfg, args.images, model, args.skip_missing_images)
    results = _parallel_map(job, docs, args.parallel)
    rows = []
    for image_id, dets, message in results:
        if dets is None:
            raise CliError(f"{message} (use --skip-missing-images to run without the skin gate)")
        if message:
            _log(f"warning: {message}")
        print(f"{image_id}\t{len(dets)}")
        rows.extend(io.DetectionRow(image_id, d.box, d.score) for d in dets)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = io.write_detections(io.DetectionFile(args.method, tuple(rows)), out_dir)
    _log(f"wrote {len(rows)} detections for {len(docs)} images to {path}")
    return 0


# -- eval -------------------------------------------------------------------

def cmd_eval(args) -> int:
    gts = io.read_ground_truth(args.gt)
    gt_by_image: dict[str, list] = {}
    for f in gts:
        gt_by_image.setdefault(f.image_id, []).append(f)
    if args.keypoints:
        image_ids = [d.image_id for d in io.read_keypoints_path(args.keypoints)]
        missing = sorted(set(gt_by_image) - set(image_ids))
        if missing:
            raise CliError(f"ground truth references images without keypoints: {', '.join(missing)}")
    else:
        image_ids = list(gt_by_image)
    known = set(image_ids)

    det_files = [io.read_detections(p) for p in args.det]
    names = [d.method for d in det_files]
    if len(set(names)) != len(names):
        raise CliError(f"duplicate method names: {names}")
    for df in det_files:
        unknown = sorted({r.image_id for r in df.rows} - known)
        if unknown:
            raise CliError(f"{df.method}: detections for unknown image ids: {', '.join(unknown)}")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frocs, prs, totals = [], [], []
    for df in det_files:
        by_image = df.by_image()
        froc = evaluation.froc_curve(by_image, gt_by_image, args.iou_min, args.x_axis, args.fp_cap,
                                     image_ids, df.method)
        pr = evaluation.pr_curve(by_image, gt_by_image, args.iou_min, image_ids, df.method)
        for series in (froc, pr):
            io.write_text(out_dir / io.curve_filename(series), io.write_curve_csv(series))
            io.write_text(out_dir / f"{df.method}.{series.kind.lower()}.svg",
                          plot.emit_plot([series], title=f"{df.method} {series.kind}"))
        frocs.append(froc)
        prs.append(pr)
        reports = evaluation.evaluate_at(by_image, gt_by_image, args.score_threshold, args.iou_min, image_ids)
        totals.append(evaluation.totals_from_reports(df.method, reports))

    io.write_text(out_dir / "froc.svg", plot.emit_plot(frocs))
    io.write_text(out_dir / "pr.svg", plot.emit_plot(prs))
    rows = evaluation.summary_table(totals, len(gts))
    summary = ["method,detected,false_alarm,accuracy"]
    summary += [f"{r.method},{r.detected},{r.false_alarm},{r.accuracy!r}" for r in rows]
    io.write_text(out_dir / "summary.csv", "\n".join(summary) + "\n")
    print(evaluation.format_table(rows))
    return 0


# -- train-skin -------------------------------------------------------------

def cmd_train_skin(args) -> int:
    root = Path(args.crops)
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in io.IMAGE_EXTENSIONS) \
        if root.is_dir() else [root]
    if not files:
        raise CliError(f"no images found in {root}")
    crops = [io.load_image(p) for p in files]
    try:
        model = skin.train_skin_model(crops, args.threshold)
    except (skin.UnusableCropError, ValueError) as exc:
        raise CliError(str(exc)) from None
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    skin.save_skin_model(model, out)
    print(f"trained_on={model.trained_on} pixels={int(model.reference.total)} "
          f"threshold={model.distance_threshold} -> {out}")
    return 0


# -- synth ------------------------------------------------------------------

def _pose_mix(text: str) -> dict:
    mix = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        try:
            mix[bfd.HeadPose(name.strip())] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"bad pose mix entry {part!r}; use e.g. frontal=0.6,left_profile=0.2,...") from None
    return mix


def cmd_synth(args) -> int:
    try:
        spec = synth.SceneSpec(
            image_size=ImageSize(args.width, args.height),
            head_pose_mix=args.pose_mix or dict(synth.DEFAULT_POSE_MIX),
            occlusion_rate=args.occlusion,
            jitter_sigma=args.jitter,
        )
        persons = args.persons if args.persons is not None else (args.persons_min, args.persons_max)
        images = synth.generate_dataset(args.n_images, persons, spec, args.seed)
    except (ValueError, synth.PlacementError) as exc:
        raise CliError(str(exc)) from None
    ds = io.Dataset(
        tuple(io.ImageRecord(im.image_id, im.image_size) for im in images),
        tuple(f for im in images for f in im.faces),
        tuple((im.image_id, p) for im in images for p in im.poses),
    )
    io.write_dataset(ds, args.out_dir)
    print(f"images={len(images)} persons={len(ds.poses)} faces={len(ds.ground_truth)} -> {args.out_dir}")
    return 0


# -- bench ------------------------------------------------------------------

def cmd_bench(args) -> int:
    cfg = _bfd_config(args)
    docs = io.read_keypoints_path(args.keypoints)
    try:
        report = bench_timing(bfd_pipeline(cfg), [d.people for d in docs], args.reps)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    print(report.format())
    result = report.as_dict()
    if args.scaling:
        counts = [1, 2, 4, 8, 16, 32, 64]
        scenes = {}
        for n in counts:
            spec = synth.SceneSpec(person_count=n, seed=args.seed, head_min=60.0, head_max=120.0)
            scenes[n] = synth.generate_scene(spec)[0]
        timings, fit = scaling_sweep(scenes, cfg)
        for n in counts:
            print(f"persons={n:3d} per-image={timings[n] * 1e6:.1f}us")
        print(f"linear fit: slope={fit.slope * 1e6:.3f}us/person r2={fit.r_squared:.4f}")
        result["scaling"] = {"per_image_s": {str(n): timings[n] for n in counts},
                             "slope_s_per_person": fit.slope, "r_squared": fit.r_squared}
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        io.write_text(out / "bench.json", json.dumps(result, indent=2) + "\n")
    return 0


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bodyface", description="Face detection from body keypoints, and its evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="keypoints -> BFD face detections")
    p.add_argument("--keypoints", required=True, type=_existing, help=".keypoints file or directory")
    p.add_argument("--images", type=_existing, help="directory of <image_id>.ppm/.png for the skin gate")
    p.add_argument("--skin-model", type=_existing, help="model written by train-skin")
    p.add_argument("--skip-missing-images", action="store_true",
                   help="leave an image's detections ungated when its image file is missing")
    p.add_argument("--method", default="BFD", help="method name for the output file (default %(default)s)")
    p.add_argument("--out-dir", default=".", help="where <method>.det.csv goes (default: current directory)")
    p.add_argument("--parallel", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker processes, one image per task (default: CPU count); output is identical")
    _add_bfd_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score detection files against ground truth")
    p.add_argument("--gt", required=True, type=_existing)
    p.add_argument("--det", required=True, action="append", type=_existing, help="repeatable")
    p.add_argument("--keypoints", type=_existing, help="defines the image set (images without faces count)")
    p.add_argument("--iou-min", type=float, default=evaluation.DEFAULT_IOU_MIN)
    p.add_argument("--x-axis", choices=["per-image", "total"], default="per-image")
    p.add_argument("--fp-cap", type=float, default=evaluation.DEFAULT_FP_CAP,
                   help="false-positive budget (total count) for FROC AUC (default %(default)s)")
    p.add_argument("--score-threshold", type=float, default=0.0,
                   help="operating point for the summary table (default %(default)s)")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-skin", help="train the skin-colour reference from face crops")
    p.add_argument("--crops", required=True, type=_existing, help="directory of face crop images")
    p.add_argument("--threshold", type=float, default=skin.DEFAULT_DISTANCE_THRESHOLD)
    p.add_argument("--out", default="skin.model")
    p.set_defaults(func=cmd_train_skin)

    p = sub.add_parser("synth", help="generate a synthetic keypoint dataset")
    p.add_argument("--persons", type=int, help="people per image (overrides --persons-min/max)")
    p.add_argument("--persons-min", type=int, default=1)
    p.add_argument("--persons-max", type=int, default=20)
    p.add_argument("--n-images", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--occlusion", type=float, default=0.0)
    p.add_argument("--jitter", type=float, default=2.0)
    p.add_argument("--pose-mix", type=_pose_mix)
    p.add_argument("--width", type=int, default=ImageSize().width)
    p.add_argument("--height", type=int, default=ImageSize().height)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="time the keypoints -> faces stage")
    p.add_argument("--keypoints", required=True, type=_existing)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--scaling", action="store_true", help="also time synthetic 1..64-person scenes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir")
    _add_bfd_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, io.ParseError, evaluation.EvaluationError, ValueError,
            skin.ImageUnavailableError, OSError) as exc:
        _log(f"bodyface {args.command}: error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
