"""Probe pose state and the per-tick control law.

Orientation: the confidence-weighted centerline offset d_c maps to a
correction angle arctan(d_c / R) integrated into theta, with a small
deadband. Lateral x recenters the selected vessel. z regulates contact
force through a spring-damper. y advances at the scan speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .geometry import ImageGeometry
from .imaging import ConfidenceMap
from .phantom import SurfaceProfile, contact_gaps
from .segmentation import SegmentationResult


@dataclass(frozen=True)
class ProbeState:
    x: float  # lateral position, mm
    y: float  # scan position, mm
    z: float  # face-center elevation, mm
    theta: float  # rotation about the advance axis, rad
    force: float = 0.0  # contact force, N


@dataclass
class ControlParams:
    curvature_radius_mm: float = 100.0  # R in arctan(d_c / R)
    k_theta: float = 1.0  # 1/s
    k_x: float = 1.2  # 1/s
    scan_speed_mm_s: float = 10.0
    spring_n_per_mm: float = 2.0
    damper_n_s_per_mm: float = 1.0
    target_force_n: float = 5.0
    deadband_mm: float = 0.3
    theta_limit_rad: float = 0.35
    correction: bool = True


def confidence_centroid(cmap: ConfidenceMap) -> float:
    """Depth-weighted confidence centroid column (px).

    Weights each confidence value by its row index, so deep coupled columns
    dominate. All-zero weighted mass is a domain error (caller holds pose).
    """
    values = cmap.values
    rows = np.arange(values.shape[0], dtype=float)
    col_mass = rows @ values  # sum_y C(x, y) * y per column
    total = col_mass.sum()
    if not total > 0:
        raise DomainError("confidence map has no depth-weighted mass")
    # centered, mirror-folded form: laterally symmetric maps cancel term by
    # term, so they land on the exact mid column with no rounding residue
    width = values.shape[1]
    center = (width - 1) / 2
    half = width // 2
    j = np.arange(half, dtype=float)
    folded = (j - center) * (col_mass[:half] - col_mass[::-1][:half])
    return float(center + folded.sum() / total)


def centerline_offset(x_c_px: float, geom: ImageGeometry) -> float:
    """Signed lateral offset of the confidence centroid from the image centerline, mm."""
    return (x_c_px - geom.center_col) * geom.pixel_pitch_mm


def correction_angle(d_c_mm: float, curvature_radius_mm: float = 100.0) -> float:
    """Orientation correction arctan(d_c / R); R must be positive."""
    if not curvature_radius_mm > 0:
        raise DomainError("curvature radius must be > 0")
    return math.atan(d_c_mm / curvature_radius_mm)


def servo_terms(cmap: ConfidenceMap, params: ControlParams):
    """(x_c px, d_c mm, theta_c rad), or (None, None, None) when degenerate."""
    try:
        x_c = confidence_centroid(cmap)
    except DomainError:
        return None, None, None
    d_c = centerline_offset(x_c, cmap.geometry)
    return x_c, d_c, correction_angle(d_c, params.curvature_radius_mm)


def step(
    probe: ProbeState,
    cmap: ConfidenceMap,
    seg: SegmentationResult,
    surface: SurfaceProfile,
    params: ControlParams,
    dt: float,
) -> ProbeState:
    """Advance the probe one control tick.

    theta integrates k_theta * arctan(d_c / R) when correction is on, d_c is
    outside the deadband, and the confidence map is non-degenerate. x tracks
    the selected candidate only (all-candidates mode freezes x). z moves to
    regulate the face contact force toward the target. y always advances.
    """
    if not dt > 0:
        raise DomainError("dt must be > 0")
    geom = cmap.geometry

    theta = probe.theta
    _x_c, d_c, theta_c = servo_terms(cmap, params)
    if params.correction and d_c is not None and abs(d_c) >= params.deadband_mm:
        lim = params.theta_limit_rad
        theta = float(np.clip(theta + params.k_theta * theta_c * dt, -lim, lim))

    x = probe.x
    if seg.selected is not None:
        cand = seg.candidates[seg.selected]
        offset_mm = (cand.centroid_px[0] - geom.center_col) * geom.pixel_pitch_mm
        x = x + params.k_x * offset_mm * dt

    y = probe.y + params.scan_speed_mm_s * dt

    moved = replace(probe, x=x, y=y, theta=theta)
    _gaps, penetration = contact_gaps(surface, moved, geom)
    force = params.spring_n_per_mm * penetration
    z = probe.z - (params.target_force_n - force) / params.damper_n_s_per_mm * dt
    settled = replace(moved, z=z)
    _gaps, penetration = contact_gaps(surface, settled, geom)
    force = params.spring_n_per_mm * penetration
    return replace(settled, force=force)
