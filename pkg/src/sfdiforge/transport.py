"""Monte Carlo transport: samplers, the subsurface walk, and the lit render.

The renderer traces camera paths through the factor-mixed surface shader
model: each surface crossing stochastically picks the scattering component
(subsurface capture or transparency) or the absorbing component (transparency
or Fresnel-weighted refraction tinted by the absorption factor).  Captured
rays random-walk through the volume with exponential free paths and
Henyey-Greenstein redirection, and every scattering event connects to the
projector (next-event estimation), which is the only light source.

Determinism contract: identical (scene, settings, seed) produces bit-identical
images for any worker count, because every (pixel, sample) pair owns its own
counter-based RNG stream and per-pixel accumulation order is fixed.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

# The thread pool size is fixed at import; reserve enough slots that callers
# can request the worker counts the determinism contract is stated for.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(16, os.cpu_count() or 1)))

import numba

from sfdiforge import _kernels
from sfdiforge.scene import (
    BoundaryCurve,
    HollowCylinder,
    Material,
    RaggedPartition,
    SceneError,
    SceneTemplate,
    Slab,
    Spheroid,
)


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RenderSettings:
    samples_per_pixel: int = 512
    max_bounces: int = 32
    roulette_start: int = 4
    roulette_survival: float = 0.7
    rng_seed: int = 0
    tile_size: int = 32
    workers: int = 0  # 0 = one worker per available core
    step_cap: int = 10_000
    antialias: bool = True
    exposure: float | None = None  # None = use the scene template's default

    def validate(self) -> None:
        if self.samples_per_pixel < 1:
            raise SceneError(f"samples_per_pixel must be >= 1, got {self.samples_per_pixel}")
        if not 0.0 < self.roulette_survival <= 1.0:
            raise SceneError(f"roulette_survival must lie in (0, 1], got {self.roulette_survival}")
        if self.max_bounces < 1 or self.tile_size < 1 or self.step_cap < 1:
            raise SceneError("max_bounces, tile_size and step_cap must be >= 1")
        if self.roulette_start < 0:
            raise SceneError("roulette_start must be >= 0")
        if self.exposure is not None and self.exposure <= 0:
            raise SceneError("exposure must be positive")


class InteractionKind:
    TRANSPARENT_PASS = "transparent_pass"
    REFRACT = "refract"
    ABSORBED = "absorbed"
    SUBSURFACE_SCATTER = "subsurface_scatter"


@dataclass(frozen=True)
class InteractionEvent:
    kind: str
    throughput_multiplier: float


@dataclass(frozen=True)
class WalkResult:
    kind: str  # "escaped" | "absorbed" | "capped"
    position: np.ndarray
    direction: np.ndarray
    throughput: float
    n_events: int


@dataclass
class RenderResult:
    image: np.ndarray  # (H, W, 3) uint8
    radiance: np.ndarray  # (H, W) float64, exposure applied, unclamped
    seconds: float
    cap_terminations: int
    max_throughput: float
    seed: int
    samples_per_pixel: int

    def sidecar_text(self) -> str:
        return (
            f"seed: {self.seed}\n"
            f"samples_per_pixel: {self.samples_per_pixel}\n"
            f"seconds: {self.seconds:.3f}\n"
            f"cap_terminations: {self.cap_terminations}\n"
            f"max_throughput: {self.max_throughput:.6f}\n"
        )


# ---------------------------------------------------------------------------
# Samplers (public operations; the numba kernels mirror these formulas)
# ---------------------------------------------------------------------------
def sample_hg(g: float, xi1, xi2):
    """Henyey-Greenstein direction sample: (cos_theta, azimuth).

    cos_theta follows the HG density with anisotropy g; azimuth is uniform
    on [0, 2*pi).  Accepts scalar or array draws.
    """
    if not -1.0 < g < 1.0:
        raise SceneError(f"anisotropy must satisfy |g| < 1, got {g}")
    xi1 = np.asarray(xi1, dtype=float)
    if abs(g) < 1e-6:
        cos_t = 1.0 - 2.0 * xi1
    else:
        s = (1.0 - g * g) / (1.0 - g + 2.0 * g * xi1)
        cos_t = (1.0 + g * g - s * s) / (2.0 * g)
    cos_t = np.clip(cos_t, -1.0, 1.0)
    azimuth = 2.0 * math.pi * np.asarray(xi2, dtype=float)
    if cos_t.ndim == 0:
        return float(cos_t), float(azimuth)
    return cos_t, azimuth


def hg_pdf(g: float, cos_t):
    """HG phase density per unit cos_theta (integrates to 1 on [-1, 1])."""
    cos_t = np.asarray(cos_t, dtype=float)
    denom = 1.0 + g * g - 2.0 * g * cos_t
    return 0.5 * (1.0 - g * g) / (denom * np.sqrt(denom))


def sample_free_path(mu_t: float, xi):
    """Exponential free path: -ln(xi)/mu_t; mu_t == 0 yields +inf."""
    if mu_t < 0:
        raise SceneError(f"mu_t must be >= 0, got {mu_t}")
    xi = np.asarray(xi, dtype=float)
    if mu_t == 0.0:
        out = np.full_like(xi, np.inf)
        return float(out) if out.ndim == 0 else out
    with np.errstate(divide="ignore"):
        out = -np.log(xi) / mu_t
    return float(out) if out.ndim == 0 else out


def sample_interaction(material: Material, xi1: float, xi2: float) -> InteractionEvent:
    """Pick one surface-shader branch from two uniform draws.

    With probability final_factor the scattering component is chosen
    (subsurface capture with probability scattering_factor, transparency
    otherwise); otherwise the absorbing component's equal mix of transparency
    and absorption-tinted refraction applies.
    """
    f = material.factors.final_factor
    if xi1 < f:
        if xi2 < material.factors.scattering_factor:
            return InteractionEvent(InteractionKind.SUBSURFACE_SCATTER, 1.0)
        return InteractionEvent(InteractionKind.TRANSPARENT_PASS, 1.0)
    if xi2 < 0.5:
        return InteractionEvent(InteractionKind.TRANSPARENT_PASS, 1.0)
    return InteractionEvent(InteractionKind.REFRACT, material.factors.absorption_factor)


def trace_subsurface(
    material: Material,
    entry_point,
    entry_direction,
    rng: np.random.Generator,
    *,
    roulette_start: int = 8,
    roulette_survival: float = 0.8,
    step_cap: int = 10_000,
    boundary_distance=None,
) -> WalkResult:
    """Random-walk a captured ray until it escapes, dies, or hits the cap.

    ``boundary_distance(position, direction)`` returns the distance to the
    medium boundary along the walk direction; the default is the half-space
    below the entry plane (a semi-infinite slab entered from above).
    """
    x = np.asarray(entry_point, dtype=float).copy()
    d = np.asarray(entry_direction, dtype=float)
    d = d / np.linalg.norm(d)
    if boundary_distance is None:
        z_top = x[2]

        def boundary_distance(p, v):
            # distance to the z = z_top plane; inf when moving away from it
            if v[2] <= 0:
                return math.inf
            return (z_top - p[2]) / v[2]

    mu_t = 1.0 / material.subsurface_mfp
    albedo = material.subsurface_albedo
    g = material.hg_g
    w = 1.0
    steps = 0
    while True:
        step = sample_free_path(mu_t, rng.random())
        b = boundary_distance(x, d)
        if step >= b:
            x = x + (b + 1e-9) * d
            return WalkResult("escaped", x, d, w, steps)
        x = x + step * d
        w *= albedo
        steps += 1
        if w <= 0.0:
            return WalkResult("absorbed", x, d, 0.0, steps)
        cos_t, phi = sample_hg(g, rng.random(), rng.random())
        d = _rotate(d, cos_t, phi)
        if steps >= step_cap:
            return WalkResult("capped", x, d, w, steps)
        if steps > roulette_start:
            p = max(roulette_survival, w)
            if rng.random() >= p:
                return WalkResult("absorbed", x, d, w, steps)
            w /= p


def _rotate(d, cos_t, phi):
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    if abs(d[2]) < 0.999:
        e1 = np.array([-d[1], d[0], 0.0])
        e1 /= np.linalg.norm(e1)
    else:
        e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.cross(d, e1)
    out = cos_t * d + sin_t * (math.cos(phi) * e1 + math.sin(phi) * e2)
    return out / np.linalg.norm(out)


# ---------------------------------------------------------------------------
# Scene compilation to kernel arrays
# ---------------------------------------------------------------------------
@dataclass
class CompiledScene:
    prim_i: np.ndarray
    prim_f: np.ndarray
    poly: np.ndarray
    mats: np.ndarray
    mu_max: float
    cam: np.ndarray
    proj: np.ndarray
    pat: np.ndarray
    exposure: float
    resolution: tuple[int, int]


def _mat_row(m: Material) -> list[float]:
    return [
        m.factors.final_factor,
        m.factors.scattering_factor,
        m.factors.absorption_factor,
        m.hg_g,
        m.ior,
        1.0 / m.subsurface_mfp,
        m.subsurface_albedo,
        m.gt_absorption,
        m.gt_scattering,
    ]


def compile_scene(scene: SceneTemplate) -> CompiledScene:
    scene.validate()
    materials = list(scene.materials)
    stage_id = len(materials)
    if scene.stage is not None:
        materials.append(scene.stage_material)
    mats = np.array([_mat_row(m) for m in materials], dtype=np.float64)

    prim_i_rows: list[list[int]] = []
    prim_f_rows: list[list[float]] = []
    poly_rows: list[list[float]] = []

    def add(prim, override_mid=None):
        row_f = [0.0] * 12
        if isinstance(prim, Spheroid):
            row_f[0:3] = prim.center
            row_f[3:6] = prim.semi_axes
            prim_i_rows.append([3, prim.material_id, -1, -1, 0])
        elif isinstance(prim, Slab):
            mid = prim.material_id if override_mid is None else override_mid
            row_f[0:3] = prim.center
            row_f[3:6] = [s / 2 for s in prim.size]
            prim_i_rows.append([0, mid, -1, -1, 0])
        elif isinstance(prim, BoundaryCurve):
            row_f[0:3] = prim.center
            row_f[3:6] = [s / 2 for s in prim.size]
            row_f[6:10] = prim.coeffs
            prim_i_rows.append([1, prim.material_ids[0], prim.material_ids[1], -1, 0])
        elif isinstance(prim, RaggedPartition):
            row_f[0:3] = prim.center
            row_f[3:6] = [s / 2 for s in prim.size]
            lo_off = len(poly_rows)
            poly_rows.extend(prim.polyline_low.tolist())
            hi_off = len(poly_rows)
            poly_rows.extend(prim.polyline_high.tolist())
            row_f[6] = float(lo_off)
            row_f[7] = float(prim.polyline_low.shape[0])
            row_f[8] = float(hi_off)
            row_f[9] = float(prim.polyline_high.shape[0])
            prim_i_rows.append([2, *prim.material_ids, 0])
        elif isinstance(prim, HollowCylinder):
            row_f[2] = prim.z0
            row_f[3] = prim.z0 + prim.length
            row_f[4] = prim.radius
            row_f[5] = prim.radius + prim.wall_thickness
            prim_i_rows.append([4, prim.material_id, -1, -1, 0])
        else:
            raise SceneError(f"cannot compile primitive {type(prim)!r}")
        prim_f_rows.append(row_f)

    # classification priority: spheroids, then other sample primitives, stage last
    for prim in scene.primitives:
        if isinstance(prim, Spheroid):
            add(prim)
    for prim in scene.primitives:
        if not isinstance(prim, Spheroid):
            add(prim)
    if scene.stage is not None:
        add(scene.stage, override_mid=stage_id)

    prim_i = np.array(prim_i_rows, dtype=np.int32)
    prim_f = np.array(prim_f_rows, dtype=np.float64)
    poly = (
        np.array(poly_rows, dtype=np.float64)
        if poly_rows
        else np.zeros((1, 2), dtype=np.float64)
    )

    cam_o = scene.camera
    cam = np.array(
        [
            *cam_o.position,
            *cam_o.right,
            *cam_o.up,
            *cam_o.forward,
            math.tan(math.radians(cam_o.fov_deg) / 2.0),
        ],
        dtype=np.float64,
    )

    p = scene.projector
    pat_o = scene.pattern
    if p.model == "orthographic":
        e_scale = p.power / (p.aperture[0] * p.aperture[1])
        half_u, half_v = p.aperture[0] / 2.0, p.aperture[1] / 2.0
        ref = 0.0
        model = 0.0
    else:
        half_angle = math.radians(p.throw_deg) / 2.0
        solid_angle = 4.0 * math.asin(math.sin(half_angle) ** 2)
        e_scale = p.power / solid_angle
        half_u = half_v = p.reference_distance * math.tan(half_angle)
        ref = p.reference_distance
        model = 1.0
    proj = np.array(
        [model, *p.position, *p.right, *p.up, *p.forward, e_scale, half_u, half_v, ref],
        dtype=np.float64,
    )
    pat = np.array(
        [
            pat_o.spatial_frequency,
            pat_o.phase,
            pat_o.orientation[0],
            pat_o.orientation[1],
            pat_o.dc_level,
            pat_o.modulation_depth,
        ],
        dtype=np.float64,
    )
    return CompiledScene(
        prim_i=prim_i,
        prim_f=prim_f,
        poly=poly,
        mats=mats,
        mu_max=float(mats[:, 5].max()),
        cam=cam,
        proj=proj,
        pat=pat,
        exposure=scene.exposure,
        resolution=tuple(cam_o.resolution),
    )


def classify_compiled(comp: CompiledScene, x: float, y: float, z: float) -> int:
    """Kernel-side classify, exposed for co-registration checks."""
    return int(_kernels.classify(comp.prim_i, comp.prim_f, comp.poly, x, y, z))


# ---------------------------------------------------------------------------
# Render
# ---------------------------------------------------------------------------
def _apply_workers(workers: int) -> int:
    limit = numba.config.NUMBA_NUM_THREADS
    n = workers if workers >= 1 else min(os.cpu_count() or 1, limit)
    n = min(n, limit)
    numba.set_num_threads(n)
    return n


def quantize(linear: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] then round half away from zero to 8-bit."""
    v = np.clip(linear, 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def first_hit_ids(scene: SceneTemplate, comp: CompiledScene | None = None) -> np.ndarray:
    """Material id of the first surface hit by each pixel's centre ray."""
    comp = comp or compile_scene(scene)
    w, h = comp.resolution
    ids = np.empty((h, w), dtype=np.int32)
    _kernels.render_hit_ids(ids, comp.prim_i, comp.prim_f, comp.poly, comp.cam)
    return ids


def render(scene: SceneTemplate, settings: RenderSettings | None = None) -> RenderResult:
    """Render the lit structured-illumination image of a scene.

    Output pixels are a linear mapping of radiance (no tone curve), clamped
    and quantised to 8 bits; the absorption tint applies equally to R, G and
    B, so all three channels carry the same value.
    """
    settings = settings or RenderSettings()
    settings.validate()
    comp = compile_scene(scene)
    w, h = comp.resolution
    tile = settings.tile_size
    n_tiles = ((w + tile - 1) // tile) * ((h + tile - 1) // tile)
    out = np.zeros((h, w), dtype=np.float64)
    stats = np.zeros((n_tiles, 2), dtype=np.float64)
    _apply_workers(settings.workers)
    t0 = time.perf_counter()
    _kernels.render_lit(
        out,
        stats,
        comp.prim_i,
        comp.prim_f,
        comp.poly,
        comp.mats,
        comp.mu_max,
        comp.cam,
        comp.proj,
        comp.pat,
        settings.samples_per_pixel,
        np.uint64(settings.rng_seed & 0xFFFFFFFFFFFFFFFF),
        settings.max_bounces,
        settings.roulette_start,
        settings.roulette_survival,
        settings.step_cap,
        tile,
        settings.antialias,
    )
    seconds = time.perf_counter() - t0
    exposure = settings.exposure if settings.exposure is not None else comp.exposure
    radiance = out * exposure
    image = np.repeat(quantize(radiance)[:, :, None], 3, axis=2)
    return RenderResult(
        image=image,
        radiance=radiance,
        seconds=seconds,
        cap_terminations=int(stats[:, 0].sum()),
        max_throughput=float(stats[:, 1].max(initial=0.0)),
        seed=settings.rng_seed,
        samples_per_pixel=settings.samples_per_pixel,
    )
