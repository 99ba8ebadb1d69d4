"""Evaluation metrics: NMAE, difference maps, and cross-model scale fitting.

NMAE = sum(|pred - ref|) / sum(ref) over all pixels of a channel.  Proxy mode
evaluates raw 8-bit channel values; physical mode scales the red channel to
0.25 mm^-1 at 255 and the green channel to 2.5 mm^-1 at 255.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sfdiforge import imageio
from sfdiforge.scene import SceneError

PHYSICAL_MAX_ABSORPTION = 0.25  # mm^-1 at pixel value 255
PHYSICAL_MAX_SCATTERING = 2.5  # mm^-1 at pixel value 255


@dataclass(frozen=True)
class ChannelScaling:
    mode: str = "proxy"  # "proxy" | "physical"

    def validate(self) -> None:
        if self.mode not in ("proxy", "physical"):
            raise SceneError(f"unknown scaling mode {self.mode!r}")

    def scales(self) -> tuple[float, float]:
        if self.mode == "proxy":
            return 1.0, 1.0
        return PHYSICAL_MAX_ABSORPTION / 255.0, PHYSICAL_MAX_SCATTERING / 255.0

    def diff_floor(self) -> tuple[float, float]:
        """Reference floor (one 8-bit step) below which relative error is invalid."""
        sa, ss = self.scales()
        return sa, ss


def extract_channels(image: np.ndarray, scaling: ChannelScaling | None = None):
    """Split an RGB property map into (absorption, scattering) planes."""
    scaling = scaling or ChannelScaling()
    scaling.validate()
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] < 3:
        raise SceneError(f"expected an RGB image, got shape {img.shape}")
    sa, ss = scaling.scales()
    if scaling.mode == "proxy":
        return img[:, :, 0].astype(np.int64), img[:, :, 1].astype(np.int64)
    return img[:, :, 0].astype(np.float64) * sa, img[:, :, 1].astype(np.float64) * ss


def nmae(pred, ref) -> float:
    """Normalised mean absolute error: sum|pred-ref| / sum(ref).

    Integer inputs are summed exactly in int64 before the single division.
    """
    p = np.asarray(pred)
    r = np.asarray(ref)
    if p.shape != r.shape:
        raise SceneError(f"nmae shape mismatch: {p.shape} vs {r.shape}")
    if np.issubdtype(p.dtype, np.integer) and np.issubdtype(r.dtype, np.integer):
        num = int(np.abs(p.astype(np.int64) - r.astype(np.int64)).sum())
        den = int(r.astype(np.int64).sum())
    else:
        num = float(np.abs(p.astype(np.float64) - r.astype(np.float64)).sum())
        den = float(r.astype(np.float64).sum())
    if den <= 0:
        raise SceneError("nmae undefined: reference sums to zero")
    return num / den


def pixel_diff_map(pred, ref, floor: float | None = None):
    """Per-pixel |pred-ref|/ref as a percentage, plus a validity mask.

    Pixels whose reference falls below the floor (default 1/255 of the
    channel's full scale in proxy units, i.e. reference value < 1) are
    flagged invalid instead of divided.
    """
    p = np.asarray(pred, dtype=np.float64)
    r = np.asarray(ref, dtype=np.float64)
    if p.shape != r.shape:
        raise SceneError(f"diff map shape mismatch: {p.shape} vs {r.shape}")
    if floor is None:
        floor = 1.0  # one 8-bit step in proxy units
    valid = r >= floor
    out = np.zeros_like(r)
    np.divide(np.abs(p - r), r, out=out, where=valid)
    return out * 100.0, valid


def fit_scale(pred, ref) -> float:
    """Least-squares scalar s minimising sum((s*pred - ref)^2)."""
    p = np.asarray(pred, dtype=np.float64)
    r = np.asarray(ref, dtype=np.float64)
    if p.shape != r.shape:
        raise SceneError(f"fit_scale shape mismatch: {p.shape} vs {r.shape}")
    denom = float((p * p).sum())
    if denom <= 0:
        raise SceneError("fit_scale undefined: prediction is identically zero")
    return float((p * r).sum()) / denom


@dataclass
class MetricsReport:
    per_image: list  # (id, nmae_absorption, nmae_scattering)
    mean_absorption: float
    mean_scattering: float
    envelope_absorption: float
    envelope_scattering: float
    scaling_mode: str
    scale_corrected: bool

    def scatter_rows(self) -> list[tuple[str, float, float]]:
        return [(i, a, s) for i, a, s in self.per_image]

    def summary(self) -> dict:
        return {
            "n_images": len(self.per_image),
            "mean_nmae_absorption": self.mean_absorption,
            "mean_nmae_scattering": self.mean_scattering,
            "envelope_nmae_absorption": self.envelope_absorption,
            "envelope_nmae_scattering": self.envelope_scattering,
            "scaling_mode": self.scaling_mode,
            "scale_corrected": self.scale_corrected,
        }


def evaluate_pair(pred_img, ref_img, scaling: ChannelScaling, scale_correct: bool):
    pa, ps = extract_channels(pred_img, scaling)
    ra, rs = extract_channels(ref_img, scaling)
    if scale_correct:
        pa = np.asarray(pa, dtype=np.float64) * fit_scale(pa, ra)
        ps = np.asarray(ps, dtype=np.float64) * fit_scale(ps, rs)
        ra = np.asarray(ra, dtype=np.float64)
        rs = np.asarray(rs, dtype=np.float64)
    return nmae(pa, ra), nmae(ps, rs)


def evaluate_dataset(
    pred_dir,
    ref_dir,
    scaling: ChannelScaling | None = None,
    *,
    scale_correct: bool = False,
    diff_maps_out=None,
) -> MetricsReport:
    """Evaluate matched PNG filenames between two directories.

    Results are independent of enumeration order.  Unmatched files raise with
    the offending names listed; an empty intersection is an error.
    """
    scaling = scaling or ChannelScaling()
    scaling.validate()
    pred_files = {p.name: p for p in Path(pred_dir).glob("*.png")}
    ref_files = {p.name: p for p in Path(ref_dir).glob("*.png")}
    common = sorted(set(pred_files) & set(ref_files))
    missing = sorted(set(pred_files) ^ set(ref_files))
    if not common:
        raise SceneError(f"no matched filenames between {pred_dir} and {ref_dir}")
    if missing:
        raise SceneError(f"unmatched files between prediction and reference dirs: {missing}")

    per_image = []
    for name in common:
        pred = imageio.load_png(pred_files[name])
        ref = imageio.load_png(ref_files[name])
        na, ns = evaluate_pair(pred, ref, scaling, scale_correct)
        per_image.append((name, na, ns))
        if diff_maps_out is not None:
            _write_diff_maps(Path(diff_maps_out), name, pred, ref, scaling)

    abs_vals = np.array([a for _, a, _ in per_image])
    sct_vals = np.array([s for _, _, s in per_image])
    return MetricsReport(
        per_image=per_image,
        mean_absorption=float(abs_vals.mean()),
        mean_scattering=float(sct_vals.mean()),
        envelope_absorption=float(abs_vals.max()),
        envelope_scattering=float(sct_vals.max()),
        scaling_mode=scaling.mode,
        scale_corrected=scale_correct,
    )


# ---------------------------------------------------------------------------
# Report output
# ---------------------------------------------------------------------------
def write_report(report: MetricsReport, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.txt", "w") as fh:
        fh.write(f"{'image':40s} {'nmae_abs':>10s} {'nmae_sct':>10s}\n")
        for name, a, s in report.per_image:
            fh.write(f"{name:40s} {a:10.6f} {s:10.6f}\n")
        fh.write(
            f"{'MEAN':40s} {report.mean_absorption:10.6f} {report.mean_scattering:10.6f}\n"
        )
        fh.write(
            f"{'ENVELOPE':40s} {report.envelope_absorption:10.6f} "
            f"{report.envelope_scattering:10.6f}\n"
        )
    with open(out / "summary.json", "w") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "scatter.tsv", "w") as fh:
        fh.write("nmae_absorption\tnmae_scattering\tid\n")
        for name, a, s in report.per_image:
            fh.write(f"{a:.8f}\t{s:.8f}\t{name}\n")


# Compact false-colour ramp (black -> blue -> red -> yellow -> white).
_RAMP_STOPS = np.array(
    [
        (0.00, 0, 0, 0),
        (0.25, 32, 12, 160),
        (0.50, 200, 40, 40),
        (0.75, 250, 200, 40),
        (1.00, 255, 255, 255),
    ],
    dtype=np.float64,
)


def false_colour(values: np.ndarray, vmax: float = 25.0) -> np.ndarray:
    """Map percentage values to an (H, W, 3) uint8 false-colour image."""
    t = np.clip(np.asarray(values, dtype=np.float64) / vmax, 0.0, 1.0)
    out = np.empty((*t.shape, 3), dtype=np.uint8)
    for c in range(3):
        out[..., c] = np.interp(t, _RAMP_STOPS[:, 0], _RAMP_STOPS[:, c + 1]).astype(np.uint8)
    return out


def _write_diff_maps(out: Path, name: str, pred, ref, scaling: ChannelScaling) -> None:
    out.mkdir(parents=True, exist_ok=True)
    pa, ps = extract_channels(pred, scaling)
    ra, rs = extract_channels(ref, scaling)
    floor_a, floor_s = scaling.diff_floor()
    stem = Path(name).stem
    for channel, p, r, floor in (
        ("absorption", pa, ra, floor_a),
        ("scattering", ps, rs, floor_s),
    ):
        pct, valid = pixel_diff_map(p, r, floor=floor)
        np.save(out / f"{stem}_{channel}_pct.npy", pct)
        np.save(out / f"{stem}_{channel}_valid.npy", valid)
        imageio.save_png(out / f"{stem}_{channel}.png", false_colour(pct))
