"""Command-line entry point.

Subcommands: render (one scene pair), sweep (dataset generation), dataset
(train/val composites), eval (NMAE report).  Every run prints its resolved
configuration and writes it next to the outputs so results are reproducible.
The default output root comes from $SFDIFORGE_OUT (falling back to ./out).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import yaml

from sfdiforge import dataset as ds
from sfdiforge import imageio, metrics, presets, sweep
from sfdiforge.groundtruth import render_ground_truth
from sfdiforge.scene import SceneError, TEMPLATE_NAMES, build_template, load_scene_spec
from sfdiforge.transport import RenderSettings, render


def _out_root() -> str:
    return os.environ.get("SFDIFORGE_OUT", "out")


def _parse_override(kv: str):
    if "=" not in kv:
        raise argparse.ArgumentTypeError(f"override must look like path=value, got {kv!r}")
    key, value = kv.split("=", 1)
    try:
        return key, float(value)
    except ValueError:
        return key, value


def _settings_from_args(args) -> RenderSettings:
    kw = {}
    for name in ("samples_per_pixel", "max_bounces", "rng_seed", "tile_size", "workers"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    if getattr(args, "exposure", None) is not None:
        kw["exposure"] = args.exposure
    return RenderSettings(**kw)


def _log_config(out_dir: Path, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    print(f"config: {json.dumps(payload, sort_keys=True)}")
    with open(out_dir / "run_config.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_render(args) -> int:
    overrides = dict(args.override or [])
    if args.freq is not None:
        overrides["pattern.spatial_frequency"] = args.freq
    if args.phase is not None:
        overrides["pattern.phase"] = args.phase
    if args.scene_file:
        scene = load_scene_spec(args.scene_file)
    else:
        scene = build_template(args.template, overrides)
    settings = _settings_from_args(args)
    out = Path(args.out)
    _log_config(
        out,
        {
            "command": "render",
            "template": scene.name,
            "overrides": overrides,
            "seed": settings.rng_seed,
            "spp": settings.samples_per_pixel,
            "workers": settings.workers,
        },
    )
    result = render(scene, settings)
    imageio.save_png(out / "input.png", result.image)
    imageio.save_png(out / "gt.png", render_ground_truth(scene))
    with open(out / "input.txt", "w") as fh:
        fh.write(result.sidecar_text())
    print(f"rendered {scene.name}: lit {result.seconds:.2f}s, cap={result.cap_terminations}")
    return 0


def cmd_sweep(args) -> int:
    if not args.preset and not args.spec:
        raise SceneError("sweep needs --preset or --spec")
    if args.preset:
        specs = presets.preset_bundle(args.preset)
    else:
        specs = [sweep.load_sweep_spec(args.spec)]
    updates = {
        k: getattr(args, k)
        for k in ("samples_per_pixel", "max_bounces", "rng_seed", "tile_size", "workers")
        if getattr(args, k) is not None
    }
    if args.exposure is not None:
        updates["exposure"] = args.exposure
    if updates:
        specs = presets.with_settings(specs, **updates)
    out = Path(args.out)
    _log_config(
        out,
        {
            "command": "sweep",
            "preset": args.preset,
            "spec": args.spec,
            "sweeps": [s.name for s in specs],
            "frames": sum(s.n_frames for s in specs),
        },
    )
    total_rendered = total_skipped = 0
    for spec in specs:
        sub = out / spec.name if len(specs) > 1 else out
        print(f"sweep {spec.name}: frames {spec.start_frame}..{spec.end_frame}")

        def progress(frame, status, lit_s, gt_s):
            if status == "rendered":
                print(f"  frame {frame:5d}: lit {lit_s:6.2f}s  gt {gt_s:5.2f}s")

        report = sweep.generate(spec, sub, progress=progress if args.verbose else None)
        lit_avg, gt_avg = report.per_frame_seconds()
        print(
            f"  {report.rendered} rendered, {report.skipped} skipped"
            + (f" (avg lit {lit_avg:.2f}s, gt {gt_avg:.2f}s/frame)" if report.rendered else "")
        )
        total_rendered += report.rendered
        total_skipped += report.skipped
        if report.failed:
            print(f"  FAILED frames: {report.failed}", file=sys.stderr)
            return 1
    print(f"total: {total_rendered} rendered, {total_skipped} skipped")
    return 0


def cmd_dataset(args) -> int:
    out = Path(args.out)
    _log_config(
        out,
        {
            "command": "dataset",
            "pairs": args.pairs,
            "train": args.train,
            "val": args.val,
            "seed": args.seed,
            "drop_blue": args.drop_blue,
            "swap": args.swap,
        },
    )
    result = ds.build_composites(
        args.pairs,
        out,
        counts=(args.train, args.val),
        seed=args.seed,
        remove_blue=args.drop_blue,
        swap_halves=args.swap,
    )
    print(
        f"wrote {args.train} train + {args.val} val composites to {out} "
        f"(seed {args.seed}, {result['header']['convention']})"
    )
    return 0


def cmd_eval(args) -> int:
    out = Path(args.out)
    _log_config(
        out,
        {
            "command": "eval",
            "pred": args.pred,
            "ref": args.ref,
            "mode": args.mode,
            "scale_correct": args.scale_correct,
        },
    )
    report = metrics.evaluate_dataset(
        args.pred,
        args.ref,
        metrics.ChannelScaling(mode=args.mode),
        scale_correct=args.scale_correct,
        diff_maps_out=(out / "diff_maps") if args.diff_maps else None,
    )
    metrics.write_report(report, out)
    print(
        f"NMAE mean abs={report.mean_absorption:.4%} sct={report.mean_scattering:.4%} "
        f"envelope abs={report.envelope_absorption:.4%} sct={report.envelope_scattering:.4%}"
    )
    return 0


def _add_settings_args(sp) -> None:
    sp.add_argument("--spp", dest="samples_per_pixel", type=int, default=None)
    sp.add_argument("--max-bounces", dest="max_bounces", type=int, default=None)
    sp.add_argument("--seed", dest="rng_seed", type=int, default=None)
    sp.add_argument("--tile", dest="tile_size", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--exposure", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sfdiforge",
        description="Synthetic structured-illumination dataset forge",
    )
    ap.add_argument("--config", help="YAML file of flag defaults", default=None)
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render one lit + ground-truth pair")
    r.add_argument("--template", choices=TEMPLATE_NAMES, default="rectangular")
    r.add_argument("--scene-file", default=None, help="YAML scene spec (overrides --template)")
    r.add_argument("--override", type=_parse_override, action="append", metavar="PATH=VALUE")
    r.add_argument("--freq", type=float, default=None, help="pattern spatial frequency (mm^-1)")
    r.add_argument("--phase", type=float, default=None, help="pattern phase (radians)")
    r.add_argument("--out", default=os.path.join(_out_root(), "render"))
    _add_settings_args(r)
    r.set_defaults(func=cmd_render)

    s = sub.add_parser("sweep", help="generate a dataset from a sweep spec or preset")
    s.add_argument("--spec", default=None, help="YAML sweep spec")
    s.add_argument("--preset", default=None, choices=presets.PRESET_NAMES)
    s.add_argument("--out", default=os.path.join(_out_root(), "sweep"))
    s.add_argument("--verbose", action="store_true", help="print per-frame timing")
    _add_settings_args(s)
    s.set_defaults(func=cmd_sweep)

    d = sub.add_parser("dataset", help="pair sweeps into train/val composites")
    d.add_argument("--pairs", nargs="+", required=True, help="sweep output directories")
    d.add_argument("--out", default=os.path.join(_out_root(), "dataset"))
    d.add_argument("--train", type=int, required=True)
    d.add_argument("--val", type=int, required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--drop-blue", action="store_true")
    d.add_argument("--swap", action="store_true", help="ground truth on the left")
    d.set_defaults(func=cmd_dataset)

    e = sub.add_parser("eval", help="NMAE report between prediction and reference dirs")
    e.add_argument("--pred", required=True)
    e.add_argument("--ref", required=True)
    e.add_argument("--out", default=os.path.join(_out_root(), "eval"))
    e.add_argument("--mode", choices=("proxy", "physical"), default="proxy")
    e.add_argument("--scale-correct", action="store_true")
    e.add_argument("--diff-maps", action="store_true")
    e.set_defaults(func=cmd_eval)
    return ap


def _apply_config_file(argv: list[str]) -> list[str]:
    """Prepend defaults from --config <yaml> as if typed before other flags."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    extra: list[str] = []
    for key, value in doc.items():
        flag = f"--{key.replace('_', '-')}"
        if isinstance(value, bool):
            if value:
                extra.append(flag)
        else:
            extra.extend([flag, str(value)])
    rest = argv[:i] + argv[i + 2 :]
    if not rest:
        return extra
    # insert config values right after the subcommand token
    return rest[:1] + extra + rest[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _apply_config_file(argv)
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (SceneError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
