"""Materials, geometry primitives, cameras, projectors, and scene templates.

All lengths are millimetres, all angles degrees unless noted.  Scenes are
immutable after construction and safe to share across render workers.

Five named templates are provided:

``rectangular``
    One flat slab, one material.
``rectangular_curved``
    Flat slab split into two materials along a smooth cubic boundary.
``rectangular_ragged``
    Flat slab split into three materials along two jagged polylines.
``rectangular_tumour``
    Curved-boundary slab with spheroid tumours protruding from the surface.
``cylinder_tumour``
    Hollow cylinder (lumen) imaged from the inside, with optional spheroid
    polyps bulging from the wall; the projector uses a perspective model.

Flat templates also carry a matte ``stage`` slab beneath the sample so that
light transmitted through an absorbing sample returns to the camera; the
stage is scene furniture, not part of the sample's primitive/material lists,
and never appears in ground-truth maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

TEMPLATE_NAMES = (
    "rectangular",
    "rectangular_curved",
    "rectangular_ragged",
    "rectangular_tumour",
    "cylinder_tumour",
)

BACKGROUND_ID = -1


class SceneError(ValueError):
    """Raised when a scene description violates a construction invariant."""


# ---------------------------------------------------------------------------
# Materials
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FactorTriple:
    """Three unitless shader-mix weights.

    ``final_factor`` blends the absorbing component (0) against the
    scattering component (1).  ``scattering_factor`` blends transparency (0)
    against subsurface scattering (1) inside the scattering component.
    ``absorption_factor`` tints the refractive absorber from black (0) to
    clear (1).
    """

    final_factor: float
    absorption_factor: float = 1.0
    scattering_factor: float = 1.0

    def validate(self) -> None:
        for name in ("final_factor", "absorption_factor", "scattering_factor"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SceneError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class Material:
    name: str
    factors: FactorTriple
    gt_absorption: float
    gt_scattering: float
    hg_g: float = 0.0
    ior: float = 1.43
    subsurface_mfp: float = 0.5  # mm, mean free path of the subsurface walk
    subsurface_albedo: float = 0.95

    def validate(self) -> None:
        self.factors.validate()
        if not 0.0 <= self.gt_absorption <= 1.0:
            raise SceneError(f"gt_absorption out of [0, 1]: {self.gt_absorption}")
        if not 0.0 <= self.gt_scattering <= 1.0:
            raise SceneError(f"gt_scattering out of [0, 1]: {self.gt_scattering}")
        if not -1.0 < self.hg_g < 1.0:
            raise SceneError(f"hg_g must lie in (-1, 1), got {self.hg_g}")
        if self.ior <= 1.0:
            raise SceneError(f"ior must be > 1, got {self.ior}")
        if self.subsurface_mfp <= 0.0:
            raise SceneError(f"subsurface_mfp must be > 0, got {self.subsurface_mfp}")
        if not 0.0 <= self.subsurface_albedo <= 1.0:
            raise SceneError(f"subsurface_albedo out of [0, 1]: {self.subsurface_albedo}")


#: Matte scattering backing placed under flat samples.
STAGE_MATERIAL = Material(
    name="stage",
    factors=FactorTriple(final_factor=1.0, absorption_factor=1.0, scattering_factor=1.0),
    gt_absorption=0.0,
    gt_scattering=0.0,
    subsurface_albedo=0.80,
)


# ---------------------------------------------------------------------------
# Geometry primitives
# ---------------------------------------------------------------------------
def _as_vec3(v) -> tuple[float, float, float]:
    t = tuple(float(x) for x in v)
    if len(t) != 3:
        raise SceneError(f"expected a 3-vector, got {v!r}")
    return t


@dataclass(frozen=True)
class Slab:
    """Axis-aligned box, one material."""

    center: tuple[float, float, float]
    size: tuple[float, float, float]  # full extents
    material_id: int = 0

    def validate(self, n_materials: int) -> None:
        if any(s <= 0 for s in self.size):
            raise SceneError(f"slab extents must be positive, got {self.size}")
        _check_mat(self.material_id, n_materials)

    @property
    def material_ids(self) -> tuple[int, ...]:
        return (self.material_id,)


@dataclass(frozen=True)
class BoundaryCurve:
    """Slab whose face splits into 2 regions along a smooth cubic arc.

    The boundary is y = c0 + c1*x + c2*x^2 + c3*x^3 in face coordinates;
    region 0 is y below the curve, region 1 above, through the whole depth.
    """

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    coeffs: tuple[float, float, float, float]
    material_ids: tuple[int, int] = (0, 1)

    def validate(self, n_materials: int) -> None:
        if any(s <= 0 for s in self.size):
            raise SceneError(f"slab extents must be positive, got {self.size}")
        for m in self.material_ids:
            _check_mat(m, n_materials)

    def boundary_y(self, x: float) -> float:
        c0, c1, c2, c3 = self.coeffs
        return c0 + x * (c1 + x * (c2 + x * c3))


@dataclass(frozen=True)
class RaggedPartition:
    """Slab whose face splits into 3 bands along two jagged polylines.

    Polylines are (N, 2) arrays of (x, y) vertices with strictly increasing
    x spanning the face; the lower polyline must stay strictly below the
    upper one so the three bands tile the face exactly.
    """

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    polyline_low: np.ndarray
    polyline_high: np.ndarray
    material_ids: tuple[int, int, int] = (0, 1, 2)

    def validate(self, n_materials: int) -> None:
        if any(s <= 0 for s in self.size):
            raise SceneError(f"slab extents must be positive, got {self.size}")
        for m in self.material_ids:
            _check_mat(m, n_materials)
        for line in (self.polyline_low, self.polyline_high):
            if line.ndim != 2 or line.shape[1] != 2 or line.shape[0] < 2:
                raise SceneError("polylines must be (N>=2, 2) arrays")
            if np.any(np.diff(line[:, 0]) <= 0):
                raise SceneError("polyline x coordinates must strictly increase")
        xs = np.linspace(self.center[0] - self.size[0] / 2, self.center[0] + self.size[0] / 2, 257)
        lo = np.interp(xs, self.polyline_low[:, 0], self.polyline_low[:, 1])
        hi = np.interp(xs, self.polyline_high[:, 0], self.polyline_high[:, 1])
        if np.any(lo >= hi):
            raise SceneError("ragged polylines cross; bands would not tile the face")


@dataclass(frozen=True)
class Spheroid:
    center: tuple[float, float, float]
    semi_axes: tuple[float, float, float]
    material_id: int = 0

    def validate(self, n_materials: int) -> None:
        if any(a <= 0 for a in self.semi_axes):
            raise SceneError(f"spheroid semi-axes must be strictly positive, got {self.semi_axes}")
        _check_mat(self.material_id, n_materials)

    @property
    def material_ids(self) -> tuple[int, ...]:
        return (self.material_id,)


@dataclass(frozen=True)
class HollowCylinder:
    """Tube wall solid: axis along +z from z0 to z0+length, inner radius
    ``radius``, outer radius ``radius + wall_thickness``."""

    radius: float
    length: float
    wall_thickness: float
    z0: float = 0.0
    material_id: int = 0

    def validate(self, n_materials: int) -> None:
        if not self.radius > self.wall_thickness > 0:
            raise SceneError(
                f"need radius > wall thickness > 0, got r={self.radius}, t={self.wall_thickness}"
            )
        if self.length <= 0:
            raise SceneError(f"cylinder length must be positive, got {self.length}")
        _check_mat(self.material_id, n_materials)


GeometryPrimitive = Slab | BoundaryCurve | RaggedPartition | Spheroid | HollowCylinder


def _check_mat(mid: int, n_materials: int) -> None:
    if not 0 <= mid < n_materials:
        raise SceneError(f"material id {mid} outside material table of size {n_materials}")


# ---------------------------------------------------------------------------
# Camera / projector
# ---------------------------------------------------------------------------
def _orthonormalize(right, up, forward) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = np.asarray(right, dtype=float)
    u = np.asarray(up, dtype=float)
    f = np.asarray(forward, dtype=float)
    basis = np.stack([r, u, f])
    gram = basis @ basis.T
    if not np.allclose(gram, np.eye(3), atol=1e-9):
        raise SceneError("camera/projector basis is not orthonormal within 1e-9")
    return r, u, f


@dataclass(frozen=True)
class Camera:
    """Pinhole camera; ``fov_deg`` spans the image width."""

    position: tuple[float, float, float]
    right: tuple[float, float, float]
    up: tuple[float, float, float]
    forward: tuple[float, float, float]
    fov_deg: float
    resolution: tuple[int, int] = (256, 256)

    def validate(self) -> None:
        _orthonormalize(self.right, self.up, self.forward)
        if not 0 < self.fov_deg < 180:
            raise SceneError(f"fov must lie in (0, 180) degrees, got {self.fov_deg}")
        if any(r < 1 for r in self.resolution):
            raise SceneError(f"resolution must be >= 1, got {self.resolution}")


@dataclass(frozen=True)
class Projector:
    """Structured-light source.

    ``orthographic`` projectors emit parallel rays over a rectangular
    aperture (``aperture`` full extents in the right/up directions).
    ``perspective`` projectors emit from the position through a virtual
    pattern plane at ``reference_distance``, where the pattern's spatial
    frequency takes its commanded value; fringes spread geometrically
    beyond it.
    """

    position: tuple[float, float, float]
    right: tuple[float, float, float]
    up: tuple[float, float, float]
    forward: tuple[float, float, float]
    power: float = 3.5  # watts
    model: str = "orthographic"
    aperture: tuple[float, float] = (50.0, 50.0)
    throw_deg: float = 100.0
    reference_distance: float = 15.0

    def validate(self) -> None:
        _orthonormalize(self.right, self.up, self.forward)
        if self.power < 0:
            raise SceneError(f"projector power must be >= 0, got {self.power}")
        if self.model not in ("orthographic", "perspective"):
            raise SceneError(f"unknown projection model {self.model!r}")
        if self.model == "perspective":
            if not 0 < self.throw_deg < 180:
                raise SceneError(f"throw angle must lie in (0, 180), got {self.throw_deg}")
            if self.reference_distance <= 0:
                raise SceneError("reference_distance must be positive")
        elif any(a <= 0 for a in self.aperture):
            raise SceneError(f"aperture extents must be positive, got {self.aperture}")


# ---------------------------------------------------------------------------
# Scene template
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SceneTemplate:
    name: str
    primitives: tuple[GeometryPrimitive, ...]
    materials: tuple[Material, ...]
    camera: Camera
    projector: Projector
    pattern: "SinusoidalPattern"
    stage: Slab | None = None
    stage_material: Material = STAGE_MATERIAL
    exposure: float = 2500.0

    def validate(self) -> None:
        from sfdiforge.illumination import SinusoidalPattern  # cycle guard

        if self.name not in TEMPLATE_NAMES:
            raise SceneError(f"unknown template name {self.name!r}")
        if not self.materials:
            raise SceneError("scene needs at least one material")
        for m in self.materials:
            m.validate()
        for p in self.primitives:
            p.validate(len(self.materials))
        self.camera.validate()
        self.projector.validate()
        if not isinstance(self.pattern, SinusoidalPattern):
            raise SceneError("pattern must be a SinusoidalPattern")
        self.pattern.validate()
        if self.stage is not None:
            self.stage_material.validate()
            if any(s <= 0 for s in self.stage.size):
                raise SceneError("stage extents must be positive")
        if self.exposure <= 0:
            raise SceneError("exposure must be positive")

    @property
    def stage_material_id(self) -> int:
        """Material id reported by classify_point for stage hits."""
        return len(self.materials)


def classify_point(scene: SceneTemplate, p) -> int:
    """Classify a point to exactly one material id.

    Spheroids take priority over their host primitive, then partitioned
    slabs, then cylinder walls, then the stage.  Points inside nothing get
    ``BACKGROUND_ID``.  The renderer and the ground-truth pass share this
    classification, which is what guarantees pixel co-registration.
    """
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    for prim in sorted(scene.primitives, key=_priority):
        mid = _contains(prim, x, y, z)
        if mid is not None:
            return mid
    if scene.stage is not None and _contains(scene.stage, x, y, z) is not None:
        return scene.stage_material_id
    return BACKGROUND_ID


def _priority(prim: GeometryPrimitive) -> int:
    return 0 if isinstance(prim, Spheroid) else 1


def _contains(prim: GeometryPrimitive, x: float, y: float, z: float) -> int | None:
    if isinstance(prim, Spheroid):
        cx, cy, cz = prim.center
        ax, ay, az = prim.semi_axes
        q = ((x - cx) / ax) ** 2 + ((y - cy) / ay) ** 2 + ((z - cz) / az) ** 2
        return prim.material_id if q <= 1.0 else None
    if isinstance(prim, (Slab, BoundaryCurve, RaggedPartition)):
        cx, cy, cz = prim.center
        hx, hy, hz = (s / 2 for s in prim.size)
        if not (abs(x - cx) <= hx and abs(y - cy) <= hy and abs(z - cz) <= hz):
            return None
        if isinstance(prim, Slab):
            return prim.material_id
        if isinstance(prim, BoundaryCurve):
            return prim.material_ids[0] if y < prim.boundary_y(x) else prim.material_ids[1]
        lo = float(np.interp(x, prim.polyline_low[:, 0], prim.polyline_low[:, 1]))
        hi = float(np.interp(x, prim.polyline_high[:, 0], prim.polyline_high[:, 1]))
        if y < lo:
            return prim.material_ids[0]
        return prim.material_ids[1] if y < hi else prim.material_ids[2]
    if isinstance(prim, HollowCylinder):
        if not prim.z0 <= z <= prim.z0 + prim.length:
            return None
        r = math.hypot(x, y)
        return prim.material_id if prim.radius <= r <= prim.radius + prim.wall_thickness else None
    raise TypeError(f"unknown primitive {type(prim)!r}")


# ---------------------------------------------------------------------------
# Template construction
# ---------------------------------------------------------------------------
_SLAB_SIZE = (50.0, 50.0, 10.0)
_SLAB_TOP = 10.0
_CAMERA_HEIGHT = 100.0  # above the slab top
_CYL_RADIUS = 15.0
_CYL_LENGTH = 100.0
_CYL_WALL = 5.0


def _flat_camera(resolution) -> Camera:
    # Frame the 50 mm slab top exactly from 100 mm above it.
    fov = 2.0 * math.degrees(math.atan((_SLAB_SIZE[0] / 2) / _CAMERA_HEIGHT))
    return Camera(
        position=(0.0, 0.0, _SLAB_TOP + _CAMERA_HEIGHT),
        right=(1.0, 0.0, 0.0),
        up=(0.0, 1.0, 0.0),
        forward=(0.0, 0.0, -1.0),
        fov_deg=fov,
        resolution=tuple(resolution),
    )


def _flat_projector(power: float) -> Projector:
    return Projector(
        position=(0.0, 0.0, _SLAB_TOP + 140.0),
        right=(1.0, 0.0, 0.0),
        up=(0.0, 1.0, 0.0),
        forward=(0.0, 0.0, -1.0),
        power=power,
        model="orthographic",
        aperture=(_SLAB_SIZE[0], _SLAB_SIZE[1]),
    )


def _stage() -> Slab:
    # Oversized matte backing 1 mm below the sample.
    return Slab(center=(0.0, 0.0, -3.0), size=(80.0, 80.0, 4.0), material_id=0)


def _default_ragged_polylines(rng_seed: int, x_half: float):
    rng = np.random.default_rng(rng_seed)
    n = 17
    xs = np.linspace(-x_half - 1.0, x_half + 1.0, n)
    low = np.column_stack([xs, -8.0 + rng.uniform(-4.0, 4.0, size=n)])
    high = np.column_stack([xs, 8.0 + rng.uniform(-4.0, 4.0, size=n)])
    return low, high


_DEFAULT_CURVE = (2.0, 0.12, -0.0075, -0.00018)


def _material(name, final, gt_a, gt_s, absorption=1.0, scattering=1.0, **kw) -> Material:
    return Material(
        name=name,
        factors=FactorTriple(final, absorption, scattering),
        gt_absorption=gt_a,
        gt_scattering=gt_s,
        **kw,
    )


class _Params(dict):
    """Override bag that records which keys were consumed."""

    def __init__(self, overrides):
        super().__init__(overrides or {})
        self.used: set = set()

    def take(self, key, default):
        self.used.add(key)
        return self.get(key, default)


def build_template(name: str, overrides: dict | None = None) -> SceneTemplate:
    """Build one of the five named scenes, applying overrides.

    Overrides use dotted paths; material factors / ground-truth channels are
    addressed as ``materials.<i>.<field>`` and spheroids as
    ``spheroids.<i>.center.x``, ``spheroids.<i>.scale`` and so on.  Unknown
    keys raise ``SceneError`` naming the path.  Construction is a pure
    function of (name, overrides).
    """
    from sfdiforge.illumination import SinusoidalPattern

    if name not in TEMPLATE_NAMES:
        raise SceneError(f"unknown template name {name!r}; expected one of {TEMPLATE_NAMES}")
    p = _Params(overrides)

    resolution = (int(p.take("camera.resolution.x", 256)), int(p.take("camera.resolution.y", 256)))
    power = float(p.take("projector.power", 3.5))
    pattern = SinusoidalPattern(
        spatial_frequency=float(p.take("pattern.spatial_frequency", 0.2)),
        phase=float(p.take("pattern.phase", 0.0)),
        orientation=(
            float(p.take("pattern.orientation.u", 1.0)),
            float(p.take("pattern.orientation.v", 0.0)),
        ),
        dc_level=float(p.take("pattern.dc_level", 0.5)),
        modulation_depth=float(p.take("pattern.modulation_depth", 0.5)),
    )

    if name == "cylinder_tumour":
        scene = _build_cylinder(name, p, pattern, power, resolution)
    else:
        scene = _build_flat(name, p, pattern, power, resolution)

    unknown = set(p) - p.used
    if unknown:
        raise SceneError(f"unknown override path(s): {sorted(unknown)}")
    scene.validate()
    return scene


def _material_defaults(name: str) -> list[Material]:
    if name == "rectangular":
        return [_material("bulk", 0.5, 0.5, 0.5)]
    if name in ("rectangular_curved", "rectangular_tumour"):
        mats = [_material("lower", 0.35, 0.65, 0.35), _material("upper", 0.65, 0.35, 0.65)]
        if name == "rectangular_tumour":
            mats.append(_material("tumour", 0.9, 0.1, 0.9, subsurface_mfp=0.35))
        return mats
    if name == "rectangular_ragged":
        return [
            _material("band0", 0.25, 0.75, 0.25),
            _material("band1", 0.55, 0.45, 0.55),
            _material("band2", 0.8, 0.2, 0.8),
        ]
    if name == "cylinder_tumour":
        return [
            _material("wall", 0.6, 0.4, 0.6),
            _material("polyp", 0.9, 0.1, 0.9, subsurface_mfp=0.35),
        ]
    raise SceneError(name)


_MAT_FIELDS = {
    "final_factor",
    "absorption_factor",
    "scattering_factor",
    "gt_absorption",
    "gt_scattering",
    "hg_g",
    "ior",
    "subsurface_mfp",
    "subsurface_albedo",
}


def _apply_material_overrides(mats: list[Material], p: _Params) -> list[Material]:
    out = []
    for i, m in enumerate(mats):
        fac = m.factors
        kw = {}
        for f in _MAT_FIELDS:
            v = p.take(f"materials.{i}.{f}", None)
            if v is None:
                continue
            v = float(v)
            if f in ("final_factor", "absorption_factor", "scattering_factor"):
                fac = replace(fac, **{f: v})
            else:
                kw[f] = v
        out.append(replace(m, factors=fac, **kw))
    return out


def _default_spheroids(name: str, mat_id: int) -> list[Spheroid]:
    if name == "rectangular_tumour":
        # Half-embedded bumps on the slab top.
        return [
            Spheroid(center=(-9.0, -6.0, 9.0), semi_axes=(6.0, 5.0, 3.5), material_id=mat_id),
            Spheroid(center=(11.0, 9.0, 9.5), semi_axes=(4.5, 4.5, 3.0), material_id=mat_id),
        ]
    # Polyps on the lumen wall, bulging inward.
    r = _CYL_RADIUS
    return [
        Spheroid(center=(r * 0.94, 0.0, 30.0), semi_axes=(5.0, 5.0, 4.5), material_id=mat_id),
        Spheroid(center=(-r * 0.66, -r * 0.66, 45.0), semi_axes=(4.0, 4.0, 3.5), material_id=mat_id),
        Spheroid(center=(0.0, r * 0.94, 60.0), semi_axes=(5.5, 5.5, 4.5), material_id=mat_id),
    ]


def _apply_spheroid_overrides(spheroids: list[Spheroid], p: _Params, count: int) -> list[Spheroid]:
    spheroids = spheroids[:count]
    out = []
    for i, s in enumerate(spheroids):
        cx = float(p.take(f"spheroids.{i}.center.x", s.center[0]))
        cy = float(p.take(f"spheroids.{i}.center.y", s.center[1]))
        cz = float(p.take(f"spheroids.{i}.center.z", s.center[2]))
        ax = float(p.take(f"spheroids.{i}.semi_axes.x", s.semi_axes[0]))
        ay = float(p.take(f"spheroids.{i}.semi_axes.y", s.semi_axes[1]))
        az = float(p.take(f"spheroids.{i}.semi_axes.z", s.semi_axes[2]))
        scale = float(p.take(f"spheroids.{i}.scale", 1.0))
        out.append(
            Spheroid(
                center=(cx, cy, cz),
                semi_axes=(ax * scale, ay * scale, az * scale),
                material_id=s.material_id,
            )
        )
    return out


def _build_flat(name, p, pattern, power, resolution) -> SceneTemplate:
    mats = _apply_material_overrides(_material_defaults(name), p)
    half = (_SLAB_SIZE[0] / 2, _SLAB_SIZE[1] / 2, _SLAB_SIZE[2] / 2)
    center = (0.0, 0.0, _SLAB_TOP - half[2])
    prims: list[GeometryPrimitive] = []

    if name == "rectangular":
        prims.append(Slab(center=center, size=_SLAB_SIZE, material_id=0))
    elif name in ("rectangular_curved", "rectangular_tumour"):
        coeffs = tuple(
            float(p.take(f"curve.c{i}", _DEFAULT_CURVE[i])) for i in range(4)
        )
        prims.append(
            BoundaryCurve(center=center, size=_SLAB_SIZE, coeffs=coeffs, material_ids=(0, 1))
        )
    else:  # rectangular_ragged
        seed = int(p.take("geometry_seed", 7))
        low, high = _default_ragged_polylines(seed, half[0])
        prims.append(
            RaggedPartition(
                center=center,
                size=_SLAB_SIZE,
                polyline_low=low,
                polyline_high=high,
                material_ids=(0, 1, 2),
            )
        )

    if name == "rectangular_tumour":
        count = int(p.take("spheroid_count", 2))
        spheroids = _apply_spheroid_overrides(_default_spheroids(name, 2), p, count)
        for s in spheroids:
            if classify_point_slab_interior(center, _SLAB_SIZE, s.center) is False:
                raise SceneError(f"spheroid centre {s.center} lies outside the slab")
        prims.extend(spheroids)

    return SceneTemplate(
        name=name,
        primitives=tuple(prims),
        materials=tuple(mats),
        camera=_flat_camera(resolution),
        projector=_flat_projector(power),
        pattern=pattern,
        stage=_stage(),
        exposure=float(p.take("exposure", 2500.0)),
    )


def classify_point_slab_interior(center, size, point) -> bool:
    return all(abs(point[i] - center[i]) <= size[i] / 2 for i in range(3))


def _build_cylinder(name, p, pattern, power, resolution) -> SceneTemplate:
    mats = _apply_material_overrides(_material_defaults(name), p)
    radius = float(p.take("cylinder.radius", _CYL_RADIUS))
    length = float(p.take("cylinder.length", _CYL_LENGTH))
    wall = float(p.take("cylinder.wall_thickness", _CYL_WALL))
    prims: list[GeometryPrimitive] = []

    count = int(p.take("spheroid_count", 3))
    spheroids = _apply_spheroid_overrides(_default_spheroids(name, 1), p, count)
    for s in spheroids:
        r = math.hypot(s.center[0], s.center[1])
        if not (0.0 <= s.center[2] <= length) or r > radius + wall:
            raise SceneError(f"polyp centre {s.center} lies outside the cylinder wall region")
    prims.extend(spheroids)
    prims.append(
        HollowCylinder(radius=radius, length=length, wall_thickness=wall, material_id=0)
    )

    cam = Camera(
        position=(0.0, 0.0, 4.0),
        right=(1.0, 0.0, 0.0),
        up=(0.0, 1.0, 0.0),
        forward=(0.0, 0.0, 1.0),
        fov_deg=float(p.take("camera.fov_deg", 95.0)),
        resolution=tuple(resolution),
    )
    proj = Projector(
        position=(5.0, 0.0, 4.0),  # 5 mm beside the camera, same axis
        right=(1.0, 0.0, 0.0),
        up=(0.0, 1.0, 0.0),
        forward=(0.0, 0.0, 1.0),
        power=power,
        model="perspective",
        throw_deg=float(p.take("projector.throw_deg", 110.0)),
        reference_distance=float(p.take("projector.reference_distance", radius)),
    )
    return SceneTemplate(
        name=name,
        primitives=tuple(prims),
        materials=tuple(mats),
        camera=cam,
        projector=proj,
        pattern=pattern,
        stage=None,
        exposure=float(p.take("exposure", 450.0)),
    )


# ---------------------------------------------------------------------------
# Scene specification files
# ---------------------------------------------------------------------------
def save_scene_spec(path, name: str, overrides: dict | None = None) -> None:
    """Write a human-editable scene description (template + overrides)."""
    doc = {"template": name, "overrides": dict(overrides or {})}
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True)


def load_scene_spec(path) -> SceneTemplate:
    """Load a scene description written by :func:`save_scene_spec`."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "template" not in doc:
        raise SceneError(f"{path}: expected a mapping with a 'template' key")
    return build_template(doc["template"], doc.get("overrides") or {})
