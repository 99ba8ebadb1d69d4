"""Shading-free ground-truth optical-property maps.

Red encodes the authored absorption channel, green the scattering channel,
blue is identically zero.  One primary ray per pixel, no supersampling and no
random numbers, so renders are bit-identical and every material region is a
single flat colour.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sfdiforge import transport
from sfdiforge.scene import SceneError, SceneTemplate


@dataclass(frozen=True)
class GtEncoding:
    """Channel conventions for ground-truth maps."""

    channel_min: float = 0.05
    channel_max: float = 0.95
    pixel_min: int = 13
    pixel_max: int = 242
    blue: int = 0


GT_ENCODING = GtEncoding()


def factor_to_pixel(v):
    """Map a unitless channel value in [0, 1] to 8 bits.

    round(v * 255), half away from zero; 0.05 -> 13 and 0.95 -> 242.
    """
    arr = np.asarray(v, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise SceneError(f"channel value outside [0, 1]: {v!r}")
    out = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    return int(out) if out.ndim == 0 else out


def render_ground_truth(scene: SceneTemplate, comp=None) -> np.ndarray:
    """Render the (H, W, 3) uint8 ground-truth map for a scene.

    Pixels whose primary ray misses all geometry are black.  The stage
    fixture under flat samples carries zero ground-truth channels, so it is
    indistinguishable from background here.
    """
    comp = comp or transport.compile_scene(scene)
    ids = transport.first_hit_ids(scene, comp)
    # LUT over material ids; slot 0 holds the background colour.
    lut = np.zeros((comp.mats.shape[0] + 1, 3), dtype=np.uint8)
    lut[1:, 0] = factor_to_pixel(comp.mats[:, 7])
    lut[1:, 1] = factor_to_pixel(comp.mats[:, 8])
    return lut[ids + 1]
