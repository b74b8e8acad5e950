"""Attention heatmaps: pseudo (label-derived) and gaze-derived.

Both map a set of source points to impulses on the pixel grid, diffuse them
with a square all-ones kernel, and max-normalize to [0, 1]. The diffusion is
an exact integer box sum (no FFT), so equal inputs give bit-equal maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import DomainError
from .geometry import ImageGeometry

KIND_ZERO = "zero"
KIND_PSEUDO = "pseudo"
KIND_RAW_GAZE = "raw_gaze"
KIND_STABILIZED = "stabilized"


@dataclass(frozen=True)
class GazeSample:
    t: int  # tick index
    x: float  # image px, may be off-image
    y: float
    valid: bool = True


@dataclass
class HeatmapParams:
    """sigma_c: centroid scatter std (px); sigma_m: point scatter std (px)."""

    sigma_c: float = 15.0
    sigma_m: float = 25.0
    n_points: int = 200
    kernel_px: int = 30
    zero_fraction: float = 0.10

    def __post_init__(self):
        if self.sigma_c < 0 or self.sigma_m < 0:
            raise DomainError("scatter stds must be >= 0")
        if self.n_points < 1:
            raise DomainError("n_points must be >= 1")
        if self.kernel_px < 1:
            raise DomainError("kernel_px must be >= 1")
        if not 0.0 <= self.zero_fraction <= 1.0:
            raise DomainError("zero_fraction must be in [0, 1]")


@dataclass
class AttentionHeatmap:
    values: np.ndarray  # (depth_px, width_px) float64 in [0, 1]
    kind: str
    geometry: ImageGeometry


def box_diffuse(impulses: np.ndarray, kernel_px: int) -> np.ndarray:
    """Convolve an impulse grid with a kernel_px-square all-ones kernel.

    Even kernels anchor at offset (k//2, k//2): output pixel (i, j) sums the
    impulse window rows i-k//2 .. i+k-1-k//2, zero padded at the borders.
    Exact for integer-valued inputs (done via an integral image).
    """
    imp = np.asarray(impulses, dtype=np.float64)
    h, w = imp.shape
    k = int(kernel_px)
    off = k // 2
    padded = np.zeros((h + k, w + k))
    padded[off : off + h, off : off + w] = imp
    integral = np.zeros((h + k + 1, w + k + 1))
    integral[1:, 1:] = padded.cumsum(axis=0).cumsum(axis=1)
    out = (
        integral[k : k + h, k : k + w]
        - integral[0:h, k : k + w]
        - integral[k : k + h, 0:w]
        + integral[0:h, 0:w]
    )
    return out


def _normalized(raw: np.ndarray, kind: str, geom: ImageGeometry) -> AttentionHeatmap:
    peak = raw.max()
    if peak > 0:
        raw = raw / peak
    return AttentionHeatmap(values=raw, kind=kind, geometry=geom)


def zero_heatmap(geom: ImageGeometry) -> AttentionHeatmap:
    return AttentionHeatmap(values=np.zeros(geom.shape()), kind=KIND_ZERO, geometry=geom)


def _impulses_from_points(pts_xy: np.ndarray, geom: ImageGeometry, clamp: bool) -> np.ndarray:
    """Round points to pixels; clamp to the border or drop out-of-image points."""
    grid = np.zeros(geom.shape())
    if len(pts_xy) == 0:
        return grid
    cols = np.rint(pts_xy[:, 0]).astype(int)
    rows = np.rint(pts_xy[:, 1]).astype(int)
    if clamp:
        cols = np.clip(cols, 0, geom.width_px - 1)
        rows = np.clip(rows, 0, geom.depth_px - 1)
    else:
        keep = (cols >= 0) & (cols < geom.width_px) & (rows >= 0) & (rows < geom.depth_px)
        cols, rows = cols[keep], rows[keep]
    np.add.at(grid, (rows, cols), 1.0)
    return grid


def label_centroid(label: np.ndarray) -> tuple[float, float]:
    """(x, y) centroid of a binary mask in px. Empty label is a domain error."""
    rows, cols = np.nonzero(label)
    if len(rows) == 0:
        raise DomainError("label mask is empty")
    return float(cols.mean()), float(rows.mean())


def generate_pseudo_heatmap(
    label: np.ndarray,
    params: HeatmapParams,
    seed: int,
    geom: Optional[ImageGeometry] = None,
) -> AttentionHeatmap:
    """Gaze-like heatmap around a label centroid.

    Draws a scattered map center around the centroid (sigma_c), then n_points
    point samples around that center (sigma_m); off-image samples clamp to the
    nearest border pixel. Impulses are diffused and max-normalized.
    """
    label = np.asarray(label)
    if geom is None:
        geom = ImageGeometry(label.shape[1], label.shape[0], 1.0)
    if label.shape != geom.shape():
        raise DomainError("label mask does not match the image grid")
    cx, cy = label_centroid(label)
    rng = np.random.default_rng(seed)
    center = np.array([cx, cy]) + params.sigma_c * rng.standard_normal(2)
    pts = center[None, :] + params.sigma_m * rng.standard_normal((params.n_points, 2))
    grid = _impulses_from_points(pts, geom, clamp=True)
    return _normalized(box_diffuse(grid, params.kernel_px), KIND_PSEUDO, geom)


def plateau_heatmap(
    center_xy: tuple[float, float], params: HeatmapParams, geom: ImageGeometry
) -> AttentionHeatmap:
    """Degenerate pseudo heatmap (no scatter): one kernel plateau at a point.

    Deterministic; used for the stabilized intention output.
    """
    pts = np.asarray([center_xy], dtype=float)
    grid = _impulses_from_points(pts, geom, clamp=True)
    return _normalized(box_diffuse(grid, params.kernel_px), KIND_STABILIZED, geom)


def pseudo_heatmap_batch(
    labels: list[np.ndarray],
    params: HeatmapParams,
    seed: int,
    geom: Optional[ImageGeometry] = None,
) -> list[AttentionHeatmap]:
    """Batch generation with a zero_fraction share replaced by zero maps."""
    rng = np.random.default_rng(seed)
    zero = rng.random(len(labels)) < params.zero_fraction
    out = []
    for i, label in enumerate(labels):
        g = geom or ImageGeometry(label.shape[1], label.shape[0], 1.0)
        if zero[i]:
            out.append(zero_heatmap(g))
        else:
            out.append(generate_pseudo_heatmap(label, params, seed + 1 + i, g))
    return out


def gaze_to_heatmap(
    window: Iterable[GazeSample], params: HeatmapParams, geom: ImageGeometry
) -> AttentionHeatmap:
    """Heatmap from a window of gaze samples.

    Valid in-bounds samples accumulate as impulses (repeat hits add); invalid
    or off-image samples are dropped. An empty contribution yields the zero
    heatmap.
    """
    pts = np.asarray([(s.x, s.y) for s in window if s.valid], dtype=float).reshape(-1, 2)
    grid = _impulses_from_points(pts, geom, clamp=False)
    if grid.sum() == 0:
        return zero_heatmap(geom)
    return _normalized(box_diffuse(grid, params.kernel_px), KIND_RAW_GAZE, geom)


def save_gaze_stream(path, samples: Iterable[GazeSample]) -> None:
    """Line-delimited gaze stream: `t x y valid` per line."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# t x y valid\n")
        for s in samples:
            fh.write(f"{s.t} {s.x!r} {s.y!r} {int(s.valid)}\n")


def load_gaze_stream(path) -> list[GazeSample]:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise DomainError(f"{path}:{lineno}: expected `t x y valid`")
            out.append(
                GazeSample(
                    t=int(parts[0]), x=float(parts[1]), y=float(parts[2]), valid=parts[3] == "1"
                )
            )
    return out
