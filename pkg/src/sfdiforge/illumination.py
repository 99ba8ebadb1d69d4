"""Sinusoidal projection patterns and projector ray emission.

The pattern is intensity = dc + depth * cos(2*pi*f*(u*ou + v*ov) + phase),
with (u, v) in millimetres on the pattern reference plane, so values stay in
[0, 1] whenever dc + depth <= 1.  Everything here is a pure function and
callable concurrently from render workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sfdiforge.scene import Projector, SceneError


@dataclass(frozen=True)
class SinusoidalPattern:
    spatial_frequency: float = 0.2  # mm^-1 on the reference plane
    phase: float = 0.0  # radians
    orientation: tuple[float, float] = (1.0, 0.0)
    dc_level: float = 0.5
    modulation_depth: float = 0.5

    def validate(self) -> None:
        if self.spatial_frequency <= 0:
            raise SceneError(f"spatial_frequency must be > 0, got {self.spatial_frequency}")
        if not 0.0 <= self.dc_level <= 1.0 or not 0.0 <= self.modulation_depth <= 1.0:
            raise SceneError("dc_level and modulation_depth must lie in [0, 1]")
        if self.dc_level + self.modulation_depth > 1.0 + 1e-12:
            raise SceneError("dc_level + modulation_depth must not exceed 1")
        n = math.hypot(*self.orientation)
        if not math.isclose(n, 1.0, abs_tol=1e-9):
            raise SceneError(f"orientation must be a unit 2-vector, norm was {n}")


def pattern_intensity(pattern: SinusoidalPattern, u, v):
    """Pattern intensity at plane coordinates (u, v) mm; in [0, 1].

    Accepts scalars or numpy arrays.
    """
    ou, ov = pattern.orientation
    s = np.multiply(u, ou) + np.multiply(v, ov)
    return pattern.dc_level + pattern.modulation_depth * np.cos(
        2.0 * math.pi * pattern.spatial_frequency * s + pattern.phase
    )


def emit_ray(projector: Projector, pattern: SinusoidalPattern, xi1: float, xi2: float):
    """Sample one projector ray from two uniform draws.

    Returns (origin, direction, weight) with weight in watts, scaled so the
    mean weight over many draws equals power * mean pattern intensity.
    Orthographic projectors emit parallel rays across the aperture;
    perspective projectors emit from the apex through the virtual pattern
    plane at ``reference_distance``.
    """
    pos = np.asarray(projector.position, dtype=float)
    right = np.asarray(projector.right, dtype=float)
    up = np.asarray(projector.up, dtype=float)
    fwd = np.asarray(projector.forward, dtype=float)

    if projector.model == "orthographic":
        hu, hv = projector.aperture[0] / 2, projector.aperture[1] / 2
        u = (2.0 * xi1 - 1.0) * hu
        v = (2.0 * xi2 - 1.0) * hv
        origin = pos + u * right + v * up
        weight = projector.power * float(pattern_intensity(pattern, u, v))
        return origin, fwd.copy(), weight

    # Perspective: uniform over the square pattern patch at the reference
    # distance; weight compensates for the non-uniform solid-angle density.
    half = projector.reference_distance * math.tan(math.radians(projector.throw_deg) / 2)
    u = (2.0 * xi1 - 1.0) * half
    v = (2.0 * xi2 - 1.0) * half
    target = projector.reference_distance * fwd + u * right + v * up
    d = target / np.linalg.norm(target)
    weight = projector.power * float(pattern_intensity(pattern, u, v))
    return pos.copy(), d, weight


def perspective_plane_coords(projector: Projector, direction) -> tuple[float, float] | None:
    """Map an emission direction to pattern-plane (u, v); None outside the throw."""
    right = np.asarray(projector.right, dtype=float)
    up = np.asarray(projector.up, dtype=float)
    fwd = np.asarray(projector.forward, dtype=float)
    d = np.asarray(direction, dtype=float)
    w = float(d @ fwd)
    if w <= 0:
        return None
    u = projector.reference_distance * float(d @ right) / w
    v = projector.reference_distance * float(d @ up) / w
    half = projector.reference_distance * math.tan(math.radians(projector.throw_deg) / 2)
    if abs(u) > half or abs(v) > half:
        return None
    return u, v
