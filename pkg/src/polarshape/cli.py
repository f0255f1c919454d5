"""Command-line pipeline surface.

One verb per pipeline stage: ``convert`` (quad/Stokes/cue conversions),
``augment`` (sensor-aware degradation of a dataset), ``eval`` (normal-map
scoring), ``scenegen`` (scene-spec sampling), ``toyset`` (toy analytic
dataset rendering), ``colorize`` (visualizations).  All randomness is
surfaced through an explicit ``--seed``; reruns with identical inputs
produce byte-identical outputs.

Exit codes: 0 success, 1 usage/configuration error, 2 data/format error,
3 evaluation error.  On any nonzero exit the command removes the files
it created, so no partial output trees remain.  Dataset manifests are
always written last.

The ``eval`` command deliberately never imports the augmentation module:
degradations are a training-time tool only.
"""

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import ConfigError, EvaluationError, FormatError, StructuralError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_EVAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _Outputs:
    """Files and directories created by one command, for failure cleanup."""

    def __init__(self):
        self.files = []
        self.dirs = []

    def mkdir(self, path) -> Path:
        path = Path(path)
        p = path
        while not p.exists() and p != p.parent:
            self.dirs.append(p)
            p = p.parent
        path.mkdir(parents=True, exist_ok=True)
        return path

    def record(self, path) -> Path:
        path = Path(path)
        self.files.append(path)
        return path

    def cleanup(self) -> None:
        for f in reversed(self.files):
            try:
                f.unlink(missing_ok=True)
            except OSError:
                pass
        for d in sorted(self.dirs, key=lambda p: len(p.parts), reverse=True):
            try:
                d.rmdir()
            except OSError:
                pass


# ---------------------------------------------------------------------------
# convert


def _discover_scene_ids(directory: Path, kind: str, ext: str = "pfm"):
    suffix = f"_{kind}.{ext}"
    return sorted(p.name[: -len(suffix)] for p in directory.glob(f"*{suffix}"))


def _write_planes(out_dir: Path, scene_id: str, planes: dict, outputs: _Outputs) -> dict:
    from . import image_io

    paths = {}
    for kind, arr in planes.items():
        name = image_io.plane_filename(scene_id, kind, ext="pfm")
        image_io.write_float_image(outputs.record(out_dir / name), arr)
        paths[kind] = name
    return paths


def _cmd_convert(args, outputs: _Outputs) -> None:
    from . import image_io, stokes

    needed = {
        "quad2stokes": ("i0", "i45", "i90", "i135"),
        "stokes2quad": ("s0", "s1", "s2"),
        "stokes2cue": ("s0", "s1", "s2"),
    }[args.direction]
    in_dir = Path(args.in_dir)
    scene_ids = args.scene_id or _discover_scene_ids(in_dir, needed[0])
    if not scene_ids:
        raise FormatError(f"no scenes with a *_{needed[0]}.pfm plane found in {in_dir}")
    out_dir = outputs.mkdir(args.out)
    for sid in sorted(scene_ids):
        planes = []
        for kind in needed:
            path = in_dir / image_io.plane_filename(sid, kind, ext="pfm")
            if not path.exists():
                raise FormatError(f"scene {sid!r}: missing plane file {path.name}")
            planes.append(image_io.read_float_image(path))
        if args.direction == "quad2stokes":
            s = stokes.quad_to_stokes(stokes.QuadPolarImage(*planes))
            _write_planes(out_dir, sid, {"s0": s.s0, "s1": s.s1, "s2": s.s2}, outputs)
        elif args.direction == "stokes2quad":
            q = stokes.stokes_to_quad(stokes.StokesImage(*planes))
            _write_planes(
                out_dir, sid,
                {"i0": q.i0, "i45": q.i45, "i90": q.i90, "i135": q.i135},
                outputs,
            )
        else:
            s = stokes.StokesImage(*planes)
            _write_planes(
                out_dir, sid,
                {"dolp": stokes.stokes_to_dolp(s), "aolp": stokes.stokes_to_aolp(s)},
                outputs,
            )
    print(f"converted {len(scene_ids)} scene(s) -> {out_dir}")


# ---------------------------------------------------------------------------
# augment


def _load_augment_config(args):
    from .augment import AugmentConfig

    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        cfg = AugmentConfig.from_text(path.read_text(encoding="utf-8"))
    else:
        cfg = AugmentConfig()
    if args.mode:
        cfg = cfg.with_mode(args.mode)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    for stage in args.disable or ():
        cfg = dataclasses.replace(cfg, **{f"enable_{stage}": False})
    return cfg


def _cmd_augment(args, outputs: _Outputs) -> None:
    from concurrent.futures import ThreadPoolExecutor

    from . import image_io
    from .augment import MODE_PRE, augment_post, augment_pre
    from .rng import RandomStream
    from .stokes import StokesImage

    cfg = _load_augment_config(args)
    manifest_path = Path(args.manifest)
    records = image_io.read_manifest(manifest_path)
    if not records:
        raise FormatError(f"manifest {manifest_path} lists no scenes")
    out_dir = outputs.mkdir(args.out)
    fn = augment_pre if cfg.mode == MODE_PRE else augment_post

    def job(rec):
        planes = [
            image_io.read_float_image(image_io.resolve_plane(manifest_path, rec, k))
            for k in ("s0", "s1", "s2")
        ]
        rgb, dolp, aolp = fn(StokesImage(*planes), cfg, RandomStream(cfg.seed, rec.scene_id))
        paths = _write_planes(out_dir, rec.scene_id, {"s0": rgb, "dolp": dolp, "aolp": aolp}, outputs)
        # ground truth travels with the augmented set unchanged
        for kind in ("normal", "mask"):
            if kind in rec.paths:
                src = image_io.resolve_plane(manifest_path, rec, kind)
                name = Path(rec.paths[kind]).name
                image_io.atomic_write_bytes(outputs.record(out_dir / name), src.read_bytes())
                paths[kind] = name
        return image_io.SceneRecord(rec.scene_id, rec.split, paths)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            new_records = list(pool.map(job, records))
    else:
        new_records = [job(r) for r in records]
    new_records.sort(key=lambda r: r.scene_id)
    image_io.write_manifest(outputs.record(out_dir / "manifest.txt"), new_records)
    print(f"augmented {len(new_records)} scene(s) [mode={cfg.mode}, seed={cfg.seed}] -> {out_dir}")


# ---------------------------------------------------------------------------
# eval


def _read_normal_any(directory: Path, scene_id: str, mask):
    from . import image_io

    pfm = directory / image_io.plane_filename(scene_id, "normal", ext="pfm")
    if pfm.exists():
        return image_io.read_float_image(pfm)
    png = directory / image_io.plane_filename(scene_id, "normal", ext="png")
    if png.exists():
        return image_io.read_normal_png(png, mask)
    raise FormatError(f"scene {scene_id!r}: no normal map found in {directory}")


def _cmd_eval(args, outputs: _Outputs) -> None:
    from . import image_io, metrics

    pred_dir = Path(args.pred)
    gt_dir = Path(args.gt)
    mask_dir = Path(args.mask) if args.mask else gt_dir
    try:
        thresholds = tuple(float(t) for t in args.thresholds.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --thresholds value {args.thresholds!r}: {exc}") from exc

    scene_ids = _discover_scene_ids(gt_dir, "normal", "pfm") + _discover_scene_ids(
        gt_dir, "normal", "png"
    )
    if not scene_ids:
        raise FormatError(f"no ground-truth normal maps found in {gt_dir}")
    reports = []
    for sid in sorted(set(scene_ids)):
        mask_path = mask_dir / image_io.plane_filename(sid, "mask", ext="png")
        if not mask_path.exists():
            raise FormatError(f"scene {sid!r}: missing mask file {mask_path.name}")
        mask = image_io.read_mask_png(mask_path)
        gt = _read_normal_any(gt_dir, sid, mask)
        pred = _read_normal_any(pred_dir, sid, mask)
        reports.append(metrics.evaluate(pred, gt, mask, thresholds, image_id=sid))
    summary = metrics.aggregate(reports, pixel_weighted=args.pixel_weighted)
    text = metrics.report_to_text(summary, pixel_weighted=args.pixel_weighted)
    if args.out:
        outputs.mkdir(Path(args.out).parent)
        image_io.atomic_write_bytes(outputs.record(args.out), text.encode("utf-8"))
    sys.stdout.write(text)


# ---------------------------------------------------------------------------
# scenegen / toyset


def _load_catalog(args):
    from . import scenegen

    if args.catalog:
        return scenegen.read_catalog(args.catalog)
    return scenegen.default_toy_catalog()


def _cmd_scenegen(args, outputs: _Outputs) -> None:
    from . import scenegen

    catalog = _load_catalog(args)
    config = scenegen.SamplerConfig(resolution=(args.height, args.width))
    out_dir = outputs.mkdir(args.out)
    for i in range(args.count):
        spec = scenegen.sample_scene(catalog, args.seed, i, config)
        scenegen.export_scene_spec(spec, outputs.record(out_dir / f"{spec.scene_id}.scene"))
    print(f"sampled {args.count} scene spec(s) [seed={args.seed}] -> {out_dir}")


def _cmd_toyset(args, outputs: _Outputs) -> None:
    from concurrent.futures import ThreadPoolExecutor

    from . import image_io, scenegen

    catalog = _load_catalog(args)
    config = scenegen.SamplerConfig(resolution=(args.height, args.width))
    out_dir = outputs.mkdir(args.out)
    frame = config.disk_radius + config.scale_range[1] * max(o.radius for o in catalog.objects)

    def job(i):
        spec = scenegen.sample_scene(catalog, args.seed, i, config)
        toy = scenegen.toy_scene_from_spec(spec, catalog, kappa=args.kappa)
        stokes_img, normal, mask = scenegen.toy_render(
            toy, spec.resolution, spec.camera, frame_half_extent=frame
        )
        scenegen.export_scene_spec(spec, outputs.record(out_dir / f"{spec.scene_id}.scene"))
        paths = _write_planes(
            out_dir, spec.scene_id,
            {"s0": stokes_img.s0, "s1": stokes_img.s1, "s2": stokes_img.s2, "normal": normal},
            outputs,
        )
        mask_name = image_io.plane_filename(spec.scene_id, "mask", ext="png")
        image_io.write_mask_png(outputs.record(out_dir / mask_name), mask)
        paths["mask"] = mask_name
        return image_io.SceneRecord(spec.scene_id, args.split, paths)

    indices = range(args.count)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            records = list(pool.map(job, indices))
    else:
        records = [job(i) for i in indices]
    records.sort(key=lambda r: r.scene_id)
    image_io.write_manifest(outputs.record(out_dir / "manifest.txt"), records)
    print(f"rendered {len(records)} toy scene(s) [seed={args.seed}] -> {out_dir}")


# ---------------------------------------------------------------------------
# colorize


def _cmd_colorize(args, outputs: _Outputs) -> None:
    from . import image_io

    img = image_io.read_float_image(args.input)
    if args.kind == "dolp":
        rgb = image_io.colorize_dolp(img)
    elif args.kind == "aolp":
        dolp = image_io.read_float_image(args.dolp) if args.dolp else None
        rgb = image_io.colorize_aolp(img, dolp)
    else:
        if not args.mask:
            raise UsageError("--mask is required for --kind normal")
        mask = image_io.read_mask_png(args.mask)
        rgb = image_io.encode_normal_image(img, mask)
    outputs.mkdir(Path(args.out).parent)
    image_io.write_png(outputs.record(args.out), rgb)
    print(f"colorized {args.kind} -> {args.out}")


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polarshape", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("convert", help="convert between quad, Stokes, and cue planes")
    p.add_argument("--direction", required=True, choices=("quad2stokes", "stokes2quad", "stokes2cue"))
    p.add_argument("--in", dest="in_dir", required=True, help="input dataset directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--scene-id", action="append", help="restrict to given scene id(s)")
    p.set_defaults(handler=_cmd_convert)

    p = sub.add_parser("augment", help="sensor-aware degradation of a Stokes dataset")
    p.add_argument("--manifest", required=True, help="input dataset manifest")
    p.add_argument("--config", help="flat key=value augmentation config file")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("pre", "post"), help="override config mode")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--disable", action="append", choices=("blur", "noise", "quant"))
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(handler=_cmd_augment)

    p = sub.add_parser("eval", help="score predicted normal maps against ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted normal maps")
    p.add_argument("--gt", required=True, help="directory of ground-truth normal maps")
    p.add_argument("--mask", help="directory of foreground masks (default: --gt)")
    p.add_argument("--thresholds", default="11.25,22.50", help="comma-separated degrees")
    p.add_argument("--pixel-weighted", action="store_true", help="weight images by pixel count")
    p.add_argument("--out", help="write the report to this file")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("scenegen", help="sample renderer-agnostic scene specs")
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--catalog", help="asset catalog file (default: built-in toy catalog)")
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--width", type=int, default=612)
    p.set_defaults(handler=_cmd_scenegen)

    p = sub.add_parser("toyset", help="render a toy analytic polarized dataset")
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--catalog", help="asset catalog file (default: built-in toy catalog)")
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--width", type=int, default=612)
    p.add_argument("--kappa", type=float, default=0.6, help="toy polarization gain in [0, 1]")
    p.add_argument("--split", default="train", choices=("train", "val", "test"))
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(handler=_cmd_toyset)

    p = sub.add_parser("colorize", help="render cue/normal planes as viewable PNGs")
    p.add_argument("--input", required=True, help="input .pfm plane")
    p.add_argument("--kind", required=True, choices=("aolp", "dolp", "normal"))
    p.add_argument("--dolp", help="optional DoLP .pfm to value-modulate AoLP hues")
    p.add_argument("--mask", help="mask .png (required for --kind normal)")
    p.add_argument("--out", required=True, help="output .png")
    p.set_defaults(handler=_cmd_colorize)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    outputs = _Outputs()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "handler", None):
            raise UsageError("no command given (see --help)")
        args.handler(args, outputs)
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        outputs.cleanup()
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        outputs.cleanup()
        return EXIT_USAGE
    except (FormatError, StructuralError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        outputs.cleanup()
        return EXIT_DATA
    except EvaluationError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        outputs.cleanup()
        return EXIT_EVAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
