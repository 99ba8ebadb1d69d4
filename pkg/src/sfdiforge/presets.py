"""Shipped sweep bundles.

``rect-family`` renders 50 frames from each flat template (200 pairs total)
and ``cylinder-full`` renders a 200-frame plain lumen plus a 120-frame
polyp-variation lumen (320 pairs).  ``factors-*`` bundles sweep wider factor
combinations (final only; final+absorption; final+scattering; all three) for
the factor-range experiments, and ``freqval-*`` bundles re-render the tumour
templates at 0.18 and 0.22 mm^-1 for frequency-generalisation validation.

Ground-truth channels are authored in lockstep with the factor tracks: the
red channel follows 1 - final (averaged with 1 - absorption when that factor
also sweeps) and the green channel follows final (averaged with the
scattering factor when it sweeps), evaluated exactly at the union of the
factor keyframes so the lockstep stays piecewise linear.
"""

from __future__ import annotations

from dataclasses import replace

from sfdiforge.sweep import SweepSpec, Track, evaluate_track
from sfdiforge.transport import RenderSettings

#: Default render settings for shipped datasets; override spp from the CLI.
PRESET_SETTINGS = RenderSettings(samples_per_pixel=256, rng_seed=7042022)

#: Recorded split seeds/counts for dataset reproduction.
SPLITS = {
    "rect-family": {"seed": 1402, "train": 140, "val": 60},
    "cylinder-full": {"seed": 2564, "train": 256, "val": 64},
}


def _ramp(target: str, f0: int, f1: int, v0: float, v1: float) -> Track:
    return Track(target=target, keyframes=((f0, v0), (f1, v1)))


def _lockstep_gt(mat: int, f_track: Track, a_track: Track | None, s_track: Track | None):
    """Author gt tracks exactly at the union of the factor keyframes."""
    frames = sorted(
        {f for f, _ in f_track.keyframes}
        | ({f for f, _ in a_track.keyframes} if a_track else set())
        | ({f for f, _ in s_track.keyframes} if s_track else set())
    )

    def gt_abs(fr):
        v = 1.0 - evaluate_track(f_track, fr)
        if a_track is not None:
            v = 0.5 * (v + (1.0 - evaluate_track(a_track, fr)))
        return v

    def gt_sct(fr):
        v = evaluate_track(f_track, fr)
        if s_track is not None:
            v = 0.5 * (v + evaluate_track(s_track, fr))
        return v

    return (
        Track(f"materials.{mat}.gt_absorption", tuple((fr, gt_abs(fr)) for fr in frames)),
        Track(f"materials.{mat}.gt_scattering", tuple((fr, gt_sct(fr)) for fr in frames)),
    )


def _final_sweep(mat: int, f0: int, f1: int, v0: float, v1: float) -> list[Track]:
    f = _ramp(f"materials.{mat}.final_factor", f0, f1, v0, v1)
    return [f, *_lockstep_gt(mat, f, None, None)]


def _tumour_tracks(n: int) -> list[Track]:
    tracks = [
        *_final_sweep(0, 1, n, 0.30, 0.70),
        *_final_sweep(1, 1, n, 0.70, 0.30),
        *_final_sweep(2, 1, n, 0.92, 0.70),
        _ramp("spheroids.0.center.x", 1, n, -15.0, 12.0),
        _ramp("spheroids.0.center.y", 1, n, -8.0, 9.0),
        _ramp("spheroids.0.center.z", 1, n, 9.5, 8.8),
        _ramp("spheroids.0.scale", 1, n, 0.7, 1.3),
        _ramp("spheroids.1.center.x", 1, n, 13.0, -11.0),
        _ramp("spheroids.1.center.y", 1, n, 10.0, -12.0),
        _ramp("spheroids.1.scale", 1, n, 1.2, 0.8),
    ]
    return tracks


def _cylinder_polyp_tracks(n: int) -> list[Track]:
    # Polyp centres drift mostly along the lumen axis; transverse drift stays
    # small so the spheroids remain attached to the wall throughout.
    return [
        *_final_sweep(0, 1, n, 0.30, 0.80),
        *_final_sweep(1, 1, n, 0.95, 0.65),
        _ramp("spheroids.0.center.z", 1, n, 24.0, 70.0),
        _ramp("spheroids.0.scale", 1, n, 0.8, 1.4),
        _ramp("spheroids.1.center.x", 1, n, -10.0, -12.5),
        _ramp("spheroids.1.center.y", 1, n, -10.0, -6.5),
        _ramp("spheroids.1.center.z", 1, n, 52.0, 34.0),
        _ramp("spheroids.1.scale", 1, n, 1.2, 0.8),
        _ramp("spheroids.2.center.z", 1, n, 64.0, 28.0),
        _ramp("spheroids.2.scale", 1, n, 0.9, 1.2),
    ]


def _rect_family(settings: RenderSettings) -> list[SweepSpec]:
    n = 50
    return [
        SweepSpec(
            name="rectangular",
            template="rectangular",
            start_frame=1,
            end_frame=n,
            tracks=tuple(_final_sweep(0, 1, n, 0.05, 0.95)),
            settings=settings,
        ),
        SweepSpec(
            name="rectangular_curved",
            template="rectangular_curved",
            start_frame=1,
            end_frame=n,
            tracks=tuple(_final_sweep(0, 1, n, 0.05, 0.95) + _final_sweep(1, 1, n, 0.95, 0.05)),
            settings=settings,
        ),
        SweepSpec(
            name="rectangular_ragged",
            template="rectangular_ragged",
            start_frame=1,
            end_frame=n,
            tracks=tuple(
                _final_sweep(0, 1, n, 0.05, 0.95)
                + _final_sweep(1, 1, n, 0.95, 0.05)
                + [
                    Track("materials.2.final_factor", ((1, 0.20), (25, 0.80), (n, 0.20))),
                    Track("materials.2.gt_absorption", ((1, 0.80), (25, 0.20), (n, 0.80))),
                    Track("materials.2.gt_scattering", ((1, 0.20), (25, 0.80), (n, 0.20))),
                ]
            ),
            settings=settings,
        ),
        SweepSpec(
            name="rectangular_tumour",
            template="rectangular_tumour",
            start_frame=1,
            end_frame=n,
            tracks=tuple(_tumour_tracks(n)),
            settings=settings,
        ),
    ]


def _cylinder_family(settings: RenderSettings) -> list[SweepSpec]:
    return [
        SweepSpec(
            name="cylinder_plain",
            template="cylinder_tumour",
            start_frame=1,
            end_frame=200,
            base_overrides={"spheroid_count": 0},
            tracks=tuple(_final_sweep(0, 1, 200, 0.05, 0.95)),
            settings=settings,
        ),
        SweepSpec(
            name="cylinder_polyps",
            template="cylinder_tumour",
            start_frame=1,
            end_frame=120,
            tracks=tuple(_cylinder_polyp_tracks(120)),
            settings=settings,
        ),
    ]


def _factor_bundle(template: str, settings: RenderSettings) -> list[SweepSpec]:
    """Four factor-range combinations: final; final+abs; final+sct; all three."""
    n = 50
    short = "rect" if template == "rectangular" else "cyl"
    base = {"spheroid_count": 0} if template == "cylinder_tumour" else {}

    def spec(name, tracks):
        return SweepSpec(
            name=f"{short}_{name}",
            template=template,
            start_frame=1,
            end_frame=n,
            base_overrides=dict(base),
            tracks=tuple(tracks),
            settings=settings,
        )

    f = _ramp("materials.0.final_factor", 1, n, 0.05, 0.95)
    a = Track("materials.0.absorption_factor", ((1, 0.95), (25, 0.05), (n, 0.95)))
    s = Track("materials.0.scattering_factor", ((1, 0.50), (13, 0.95), (37, 0.05), (n, 0.50)))

    out = [spec("final_only", [f, *_lockstep_gt(0, f, None, None)])]
    out.append(spec("final_abs", [f, a, *_lockstep_gt(0, f, a, None)]))
    out.append(spec("final_sct", [f, s, *_lockstep_gt(0, f, None, s)]))
    out.append(spec("all_three", [f, a, s, *_lockstep_gt(0, f, a, s)]))
    return out


def _freqval(template: str, freq: float, settings: RenderSettings) -> list[SweepSpec]:
    n = 50
    tracks = _tumour_tracks(n) if template == "rectangular_tumour" else _cylinder_polyp_tracks(n)
    short = "rect" if template == "rectangular_tumour" else "cyl"
    return [
        SweepSpec(
            name=f"{short}_f{freq:.2f}",
            template=template,
            start_frame=1,
            end_frame=n,
            base_overrides={"pattern.spatial_frequency": freq},
            tracks=tuple(tracks),
            settings=settings,
        )
    ]


def preset_bundle(name: str, settings: RenderSettings | None = None) -> list[SweepSpec]:
    """Look up a preset bundle by name; see PRESET_NAMES for the catalogue."""
    settings = settings or PRESET_SETTINGS
    bundles = {
        "rect-family": lambda: _rect_family(settings),
        "cylinder-full": lambda: _cylinder_family(settings),
        "factors-rect": lambda: _factor_bundle("rectangular", settings),
        "factors-cylinder": lambda: _factor_bundle("cylinder_tumour", settings),
        "freqval-rect-0.18": lambda: _freqval("rectangular_tumour", 0.18, settings),
        "freqval-rect-0.22": lambda: _freqval("rectangular_tumour", 0.22, settings),
        "freqval-cyl-0.18": lambda: _freqval("cylinder_tumour", 0.18, settings),
        "freqval-cyl-0.22": lambda: _freqval("cylinder_tumour", 0.22, settings),
    }
    if name not in bundles:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(bundles)}")
    return bundles[name]()


PRESET_NAMES = (
    "rect-family",
    "cylinder-full",
    "factors-rect",
    "factors-cylinder",
    "freqval-rect-0.18",
    "freqval-rect-0.22",
    "freqval-cyl-0.18",
    "freqval-cyl-0.22",
)


def with_settings(specs: list[SweepSpec], **settings_updates) -> list[SweepSpec]:
    """Return the bundle with render-settings fields overridden."""
    return [replace(s, settings=replace(s.settings, **settings_updates)) for s in specs]
