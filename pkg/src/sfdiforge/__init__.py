"""Synthetic SFDI dataset forge.

Monte Carlo rendering of sinusoidally structured illumination on turbid
materials, perfect ground-truth optical-property maps, keyframe sweeps for
mass dataset generation, train/val pairing, and NMAE evaluation tooling.
"""

from sfdiforge.scene import (
    Camera,
    FactorTriple,
    Material,
    Projector,
    SceneTemplate,
    TEMPLATE_NAMES,
    build_template,
    classify_point,
)
from sfdiforge.illumination import SinusoidalPattern, emit_ray, pattern_intensity
from sfdiforge.transport import RenderSettings, render
from sfdiforge.groundtruth import factor_to_pixel, render_ground_truth
from sfdiforge.sweep import SweepSpec, Track, evaluate_track, generate, instantiate_frame
from sfdiforge.metrics import ChannelScaling, evaluate_dataset, fit_scale, nmae, pixel_diff_map

__version__ = "0.1.0"

__all__ = [
    "Camera",
    "ChannelScaling",
    "FactorTriple",
    "Material",
    "Projector",
    "RenderSettings",
    "SceneTemplate",
    "SinusoidalPattern",
    "SweepSpec",
    "TEMPLATE_NAMES",
    "Track",
    "build_template",
    "classify_point",
    "emit_ray",
    "evaluate_dataset",
    "evaluate_track",
    "factor_to_pixel",
    "fit_scale",
    "generate",
    "instantiate_frame",
    "nmae",
    "pattern_intensity",
    "pixel_diff_map",
    "render",
    "render_ground_truth",
]
