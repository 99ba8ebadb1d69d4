"""Keyframe sweep engine: one scene per integer frame, linear interpolation.

A sweep drives scene-override paths (material factors, ground-truth channels,
spheroid position/scale, pattern parameters) across a frame range and renders
a lit + ground-truth pair per frame.  Output directories carry a line-
delimited JSON manifest, one row per frame, which makes generation resumable:
frames whose files exist and hash-match their manifest row are skipped.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from sfdiforge import imageio
from sfdiforge.groundtruth import render_ground_truth
from sfdiforge.scene import SceneError, SceneTemplate, build_template
from sfdiforge.transport import RenderSettings, compile_scene, render


@dataclass(frozen=True)
class Track:
    """One keyframed parameter: target override path + (frame, value) keys."""

    target: str
    keyframes: tuple[tuple[int, float], ...]

    def validate(self) -> None:
        if not self.keyframes:
            raise SceneError(f"track {self.target!r} needs at least one keyframe")
        frames = [k[0] for k in self.keyframes]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise SceneError(f"track {self.target!r} keyframe frames must strictly increase")


def evaluate_track(track: Track, frame: int) -> float:
    """Exact keyframe values at keyframes, linear in between, clamped outside."""
    keys = track.keyframes
    if frame <= keys[0][0]:
        return float(keys[0][1])
    if frame >= keys[-1][0]:
        return float(keys[-1][1])
    for (f0, v0), (f1, v1) in zip(keys, keys[1:]):
        if f0 <= frame <= f1:
            if frame == f0:
                return float(v0)
            if frame == f1:
                return float(v1)
            return v0 + (frame - f0) * (v1 - v0) / (f1 - f0)
    raise AssertionError("unreachable: keyframes are ordered")


@dataclass(frozen=True)
class SweepSpec:
    name: str
    template: str
    start_frame: int
    end_frame: int
    tracks: tuple[Track, ...] = ()
    base_overrides: dict = field(default_factory=dict)
    settings: RenderSettings = field(default_factory=RenderSettings)

    def validate(self) -> None:
        if self.start_frame > self.end_frame:
            raise SceneError(
                f"start_frame {self.start_frame} must be <= end_frame {self.end_frame}"
            )
        for t in self.tracks:
            t.validate()
        self.settings.validate()

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame + 1

    def frames(self) -> range:
        return range(self.start_frame, self.end_frame + 1)


def frame_parameters(spec: SweepSpec, frame: int) -> dict:
    """Evaluated track values for one frame, keyed by target path."""
    return {t.target: evaluate_track(t, frame) for t in spec.tracks}


def instantiate_frame(spec: SweepSpec, frame: int) -> SceneTemplate:
    """Scene for one frame: template defaults + base overrides + track values."""
    if not spec.start_frame <= frame <= spec.end_frame:
        raise SceneError(f"frame {frame} outside sweep range [{spec.start_frame}, {spec.end_frame}]")
    overrides = dict(spec.base_overrides)
    overrides.update(frame_parameters(spec, frame))
    return build_template(spec.template, overrides)


def frame_seed(base_seed: int, frame: int) -> int:
    """Per-frame render seed; stable and collision-free across a sweep."""
    return (base_seed + 0x9E3779B9 * frame) & 0xFFFFFFFFFFFFFFFF


# ---------------------------------------------------------------------------
# Generation with a resumable manifest
# ---------------------------------------------------------------------------
MANIFEST_NAME = "manifest.jsonl"


def _manifest_rows(path: Path) -> dict[int, dict]:
    rows: dict[int, dict] = {}
    if path.exists():
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    row = json.loads(line)
                    rows[int(row["frame"])] = row
    return rows


def _frame_is_done(out_dir: Path, row: dict) -> bool:
    for key, sha_key in (("input", "input_sha256"), ("gt", "gt_sha256")):
        f = out_dir / row[key]
        if not f.exists() or imageio.sha256_file(f) != row[sha_key]:
            return False
    return True


@dataclass
class GenerateReport:
    rendered: int = 0
    skipped: int = 0
    failed: list = field(default_factory=list)
    lit_seconds: float = 0.0
    gt_seconds: float = 0.0
    manifest_path: str = ""

    def per_frame_seconds(self) -> tuple[float, float]:
        n = max(self.rendered, 1)
        return self.lit_seconds / n, self.gt_seconds / n


def generate(spec: SweepSpec, out_dir, progress=None) -> GenerateReport:
    """Render every frame pair of a sweep into out_dir.

    Already-complete frames (per manifest hash) are skipped, so interrupted
    runs resume cleanly.  I/O failures are recorded per frame and do not
    abort the remaining frames.  Manifest rows are written in frame order.
    """
    spec.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / MANIFEST_NAME
    existing = _manifest_rows(manifest_path)
    report = GenerateReport(manifest_path=str(manifest_path))
    rows: dict[int, dict] = {}

    for frame in spec.frames():
        prior = existing.get(frame)
        if prior is not None and _frame_is_done(out, prior):
            rows[frame] = prior
            report.skipped += 1
            if progress:
                progress(frame, "skipped", 0.0, 0.0)
            continue
        try:
            rows[frame] = _render_frame(spec, frame, out, report)
            if progress:
                progress(frame, "rendered", rows[frame]["lit_seconds"], rows[frame]["gt_seconds"])
        except OSError as exc:  # pragma: no cover - disk faults
            report.failed.append((frame, str(exc)))

    with open(manifest_path, "w") as fh:
        for frame in sorted(rows):
            fh.write(json.dumps(rows[frame], sort_keys=True) + "\n")
    return report


def _render_frame(spec: SweepSpec, frame: int, out: Path, report: GenerateReport) -> dict:
    scene = instantiate_frame(spec, frame)
    seed = frame_seed(spec.settings.rng_seed, frame)
    settings = replace(spec.settings, rng_seed=seed)

    result = render(scene, settings)
    input_name = f"frame_{frame:05d}_input.png"
    gt_name = f"frame_{frame:05d}_gt.png"
    imageio.save_png(out / input_name, result.image)

    t0 = time.perf_counter()
    gt = render_ground_truth(scene, compile_scene(scene))
    gt_seconds = time.perf_counter() - t0
    imageio.save_png(out / gt_name, gt)

    report.rendered += 1
    report.lit_seconds += result.seconds
    report.gt_seconds += gt_seconds
    return {
        "frame": frame,
        "template": spec.template,
        "sweep": spec.name,
        "params": frame_parameters(spec, frame),
        "base_overrides": spec.base_overrides,
        "seed": seed,
        "spp": settings.samples_per_pixel,
        "input": input_name,
        "gt": gt_name,
        "input_sha256": imageio.sha256_file(out / input_name),
        "gt_sha256": imageio.sha256_file(out / gt_name),
        "lit_seconds": round(result.seconds, 4),
        "gt_seconds": round(gt_seconds, 4),
        "cap_terminations": result.cap_terminations,
    }


# ---------------------------------------------------------------------------
# Sweep spec files
# ---------------------------------------------------------------------------
def save_sweep_spec(path, spec: SweepSpec) -> None:
    doc = {
        "name": spec.name,
        "template": spec.template,
        "start_frame": spec.start_frame,
        "end_frame": spec.end_frame,
        "base_overrides": dict(spec.base_overrides),
        "tracks": [
            {"target": t.target, "keyframes": [[f, v] for f, v in t.keyframes]}
            for t in spec.tracks
        ],
        "settings": {
            "samples_per_pixel": spec.settings.samples_per_pixel,
            "max_bounces": spec.settings.max_bounces,
            "rng_seed": spec.settings.rng_seed,
            "tile_size": spec.settings.tile_size,
            "workers": spec.settings.workers,
        },
    }
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True)


def load_sweep_spec(path) -> SweepSpec:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    try:
        tracks = tuple(
            Track(
                target=t["target"],
                keyframes=tuple((int(f), float(v)) for f, v in t["keyframes"]),
            )
            for t in doc.get("tracks", [])
        )
        settings_kw = doc.get("settings", {}) or {}
        spec = SweepSpec(
            name=doc.get("name", Path(path).stem),
            template=doc["template"],
            start_frame=int(doc["start_frame"]),
            end_frame=int(doc["end_frame"]),
            tracks=tracks,
            base_overrides=doc.get("base_overrides", {}) or {},
            settings=RenderSettings(**settings_kw),
        )
    except (KeyError, TypeError) as exc:
        raise SceneError(f"{path}: malformed sweep spec ({exc})") from exc
    spec.validate()
    return spec
