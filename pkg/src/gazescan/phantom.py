"""Virtual forearm phantom: surface profile and branched vessel tree.

World frame: z up, y along the scan (advance) direction, x lateral.
The imaging plane at probe position y is the world plane {y = const};
probe rotation theta about its advance axis is an in-plane rotation of
the image axes. Positive theta tilts the beam toward +x, so the face
direction in world coordinates is u = (cos t, 0, sin t) and the beam
(depth) direction is d = (sin t, 0, -cos t).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .errors import DomainError
from .geometry import ImageGeometry

if TYPE_CHECKING:
    from .control import ProbeState

JUNCTION_TOL_MM = 0.1
# branch tangents closer than this to lying in the imaging plane produce
# unboundedly long ellipses; the major axis is clamped and the lumen flagged
_MIN_COS_OBLIQUE = 0.05


@dataclass
class SurfaceProfile:
    """Skin surface over the scan area.

    kind: "flat", "cylinder" (radius_mm, apex along x=0), or "heightfield"
    (heights_mm sampled on a regular grid spanning the extent).
    extent_mm: ((xmin, xmax), (ymin, ymax)) scan-area bounds.
    """

    kind: str
    extent_mm: tuple[tuple[float, float], tuple[float, float]]
    radius_mm: Optional[float] = None
    heights_mm: Optional[np.ndarray] = None
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        (x0, x1), (y0, y1) = self.extent_mm
        if not (x1 > x0 and y1 > y0):
            raise DomainError("surface extent must be non-degenerate")
        if self.kind == "flat":
            pass
        elif self.kind == "cylinder":
            if self.radius_mm is None or not self.radius_mm > 0:
                raise DomainError("cylinder surface needs radius_mm > 0")
            if max(abs(x0), abs(x1)) >= self.radius_mm:
                raise DomainError("cylinder extent must stay within |x| < radius")
        elif self.kind == "heightfield":
            h = np.asarray(self.heights_mm, dtype=float)
            if h.ndim == 1:
                h = np.vstack([h, h])  # constant along y
            if h.ndim != 2 or h.shape[0] < 2 or h.shape[1] < 2:
                raise DomainError("heightfield needs a 2-D grid of control heights")
            self.heights_mm = h
            ys = np.linspace(y0, y1, h.shape[0])
            xs = np.linspace(x0, x1, h.shape[1])
            # spline degree per axis, capped by the sample count on that axis
            deg_y = min(3, h.shape[0] - 1)
            deg_x = min(3, h.shape[1] - 1)
            self._interp = RectBivariateSpline(ys, xs, h, kx=deg_y, ky=deg_x)
        else:
            raise DomainError(f"unknown surface kind {self.kind!r}")


def surface_height(surface: SurfaceProfile, x, y):
    """Surface height z(x, y) in mm. Raises DomainError outside the extent.

    x may be an array; y is a scalar scan position.
    """
    x = np.asarray(x, dtype=float)
    (x0, x1), (y0, y1) = surface.extent_mm
    eps = 1e-9
    if np.any(x < x0 - eps) or np.any(x > x1 + eps) or y < y0 - eps or y > y1 + eps:
        raise DomainError(f"surface query (x, y={y}) outside extent {surface.extent_mm}")
    if surface.kind == "flat":
        return np.zeros_like(x)
    if surface.kind == "cylinder":
        return np.sqrt(surface.radius_mm**2 - np.clip(x, x0, x1) ** 2)
    vals = surface._interp(np.clip(y, y0, y1), np.clip(x, x0, x1), grid=False)
    return np.asarray(vals, dtype=float).reshape(x.shape)


@dataclass
class VesselBranch:
    """3-D centerline polyline with per-vertex radii.

    parent is the id of the branch this one forks from; the first vertex must
    lie on the parent centerline within JUNCTION_TOL_MM.
    """

    branch_id: str
    centerline_mm: np.ndarray  # (N, 3)
    radius_mm: np.ndarray  # (N,)
    parent: Optional[str] = None

    def __post_init__(self):
        c = np.asarray(self.centerline_mm, dtype=float)
        if c.ndim != 2 or c.shape[1] != 3 or c.shape[0] < 2:
            raise DomainError(f"branch {self.branch_id}: centerline must be (N>=2, 3)")
        r = np.asarray(self.radius_mm, dtype=float)
        if r.ndim == 0:
            r = np.full(c.shape[0], float(r))
        if r.shape != (c.shape[0],):
            raise DomainError(f"branch {self.branch_id}: one radius per vertex required")
        if not np.all(r > 0):
            raise DomainError(f"branch {self.branch_id}: radii must be > 0")
        self.centerline_mm = c
        self.radius_mm = r


def _point_to_polyline_mm(p: np.ndarray, line: np.ndarray) -> float:
    a = line[:-1]
    b = line[1:]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    denom = np.where(denom > 0, denom, 1.0)
    t = np.clip(np.einsum("j,ij->i", p, ab) - np.einsum("ij,ij->i", a, ab), 0, denom) / denom
    closest = a + ab * t[:, None]
    return float(np.sqrt(((closest - p) ** 2).sum(axis=1).min()))


@dataclass
class VesselTree:
    branches: list[VesselBranch]
    root: str

    def __post_init__(self):
        ids = [b.branch_id for b in self.branches]
        if len(set(ids)) != len(ids):
            raise DomainError("branch ids must be unique")
        by_id = {b.branch_id: b for b in self.branches}
        if self.root not in by_id:
            raise DomainError(f"root branch {self.root!r} not present")
        for b in self.branches:
            if b.branch_id == self.root:
                if b.parent is not None:
                    raise DomainError("root branch must not declare a parent")
                continue
            if b.parent not in by_id:
                raise DomainError(f"branch {b.branch_id}: unknown parent {b.parent!r}")
            d = _point_to_polyline_mm(b.centerline_mm[0], by_id[b.parent].centerline_mm)
            if d > JUNCTION_TOL_MM:
                raise DomainError(
                    f"branch {b.branch_id}: first vertex {d:.3f} mm off parent centerline"
                    f" (tolerance {JUNCTION_TOL_MM} mm)"
                )
        # reachability from root
        seen = {self.root}
        pending = [self.root]
        while pending:
            cur = pending.pop()
            for b in self.branches:
                if b.parent == cur and b.branch_id not in seen:
                    seen.add(b.branch_id)
                    pending.append(b.branch_id)
        if seen != set(ids):
            raise DomainError("vessel tree has branches unreachable from the root")

    def branch(self, branch_id: str) -> VesselBranch:
        for b in self.branches:
            if b.branch_id == branch_id:
                return b
        raise DomainError(f"no branch {branch_id!r}")


def validate_phantom(surface: SurfaceProfile, tree: VesselTree) -> None:
    """Every vessel must lie strictly below the surface."""
    for b in tree.branches:
        for (x, y, z), r in zip(b.centerline_mm, b.radius_mm):
            h = float(surface_height(surface, np.asarray([x]), y)[0])
            if z + r >= h:
                raise DomainError(
                    f"branch {b.branch_id}: lumen top {z + r:.2f} mm reaches surface {h:.2f} mm"
                    f" at y={y:.1f}"
                )


@dataclass
class Lumen:
    """One elliptical vessel cross-section in image coordinates."""

    branch_id: str
    center_mm: tuple[float, float]  # (lateral from centerline, depth from face)
    semi_axes_mm: tuple[float, float]  # (major, minor)
    angle_rad: float  # major-axis direction in the image plane
    clipped: bool  # extends beyond (or lies outside) the field of view


@dataclass
class CrossSection:
    lumens: list[Lumen]
    probe_y_mm: float


def _world_to_image_mm(dx: float, dz: float, theta: float) -> tuple[float, float]:
    # u = (cos t, 0, sin t), d = (sin t, 0, -cos t); point is (dx, 0, dz) from the face center
    ct, st = np.cos(theta), np.sin(theta)
    return dx * ct + dz * st, dx * st - dz * ct


def cross_section(tree: VesselTree, probe: "ProbeState", fov: ImageGeometry) -> CrossSection:
    """Slice the vessel tree with the imaging plane at the probe position.

    Each transversal crossing of a branch centerline yields one elliptical
    lumen: semi-minor axis r, semi-major r/|cos phi| with phi the angle
    between the local tangent and the plane normal (the advance axis).
    """
    lumens: list[Lumen] = []
    half_w = fov.center_col * fov.pixel_pitch_mm
    max_d = (fov.depth_px - 1) * fov.pixel_pitch_mm
    for b in tree.branches:
        pts = b.centerline_mm
        dy = pts[:, 1] - probe.y
        for i in range(len(pts) - 1):
            y0, y1 = dy[i], dy[i + 1]
            # half-open crossing rule: a vertex exactly on the plane belongs to
            # the segment leaving it, so shared junction vertices count once
            if not ((y0 <= 0 < y1) or (y1 <= 0 < y0)):
                continue
            t = -y0 / (y1 - y0)
            p = pts[i] + t * (pts[i + 1] - pts[i])
            r = b.radius_mm[i] + t * (b.radius_mm[i + 1] - b.radius_mm[i])
            tangent = pts[i + 1] - pts[i]
            tangent = tangent / np.linalg.norm(tangent)
            cos_phi = abs(tangent[1])
            clipped = False
            if cos_phi < _MIN_COS_OBLIQUE:
                cos_phi = _MIN_COS_OBLIQUE
                clipped = True
            major = r / cos_phi
            minor = r
            # in-plane direction of the major axis = projected tangent
            u_mm, d_mm = _world_to_image_mm(p[0] - probe.x, p[2] - probe.z, probe.theta)
            tu, td = _world_to_image_mm(tangent[0], tangent[2], probe.theta)
            angle = float(np.arctan2(td, tu)) if (tu * tu + td * td) > 1e-18 else 0.0
            # rotated-ellipse bounding half-extents
            ca, sa = np.cos(angle), np.sin(angle)
            ext_u = float(np.hypot(major * ca, minor * sa))
            ext_d = float(np.hypot(major * sa, minor * ca))
            if (
                u_mm - ext_u < -half_w
                or u_mm + ext_u > half_w
                or d_mm - ext_d < 0
                or d_mm + ext_d > max_d
            ):
                clipped = True
            lumens.append(
                Lumen(
                    branch_id=b.branch_id,
                    center_mm=(float(u_mm), float(d_mm)),
                    semi_axes_mm=(float(major), float(minor)),
                    angle_rad=angle,
                    clipped=clipped,
                )
            )
    return CrossSection(lumens=lumens, probe_y_mm=float(probe.y))


def rasterize_labels(cs: CrossSection, fov: ImageGeometry) -> list[tuple[str, np.ndarray]]:
    """Binary mask per lumen (pixel center inside the ellipse), with branch id."""
    out = []
    cols = fov.col_offsets_mm()
    rows = fov.row_to_mm(np.arange(fov.depth_px))
    for lum in cs.lumens:
        mask = np.zeros(fov.shape(), dtype=bool)
        a, bax = lum.semi_axes_mm
        if a > 0 and bax > 0:
            cu, cd = lum.center_mm
            ca, sa = np.cos(lum.angle_rad), np.sin(lum.angle_rad)
            # bounding box in px to keep the fill local
            ext_u = np.hypot(a * ca, bax * sa)
            ext_d = np.hypot(a * sa, bax * ca)
            c0 = max(0, int(np.floor(fov.mm_to_col(cu - ext_u))))
            c1 = min(fov.width_px, int(np.ceil(fov.mm_to_col(cu + ext_u))) + 1)
            r0 = max(0, int(np.floor(fov.mm_to_row(cd - ext_d))))
            r1 = min(fov.depth_px, int(np.ceil(fov.mm_to_row(cd + ext_d))) + 1)
            if c0 < c1 and r0 < r1:
                du = cols[c0:c1][None, :] - cu
                dd = rows[r0:r1][:, None] - cd
                uu = (du * ca + dd * sa) / a
                vv = (-du * sa + dd * ca) / bax
                mask[r0:r1, c0:c1] = uu * uu + vv * vv <= 1.0
        out.append((lum.branch_id, mask))
    return out


def contact_gaps(
    surface: SurfaceProfile, probe: "ProbeState", fov: ImageGeometry
) -> tuple[np.ndarray, float]:
    """Per-column air gap between the probe face and the surface, plus penetration.

    The face is a tilted line segment through the probe origin. Columns whose
    world x falls outside the surface extent use the edge height (the phantom
    is treated as continuing flat past its modelled area).
    Returns (gaps_mm >= 0 per column, penetration_mm >= 0).
    """
    xi = fov.col_offsets_mm()
    ct, st = np.cos(probe.theta), np.sin(probe.theta)
    (x0, x1), (y0, y1) = surface.extent_mm
    wx = np.clip(probe.x + xi * ct, x0, x1)
    wy = min(max(probe.y, y0), y1)
    face_z = probe.z + xi * st
    h = surface_height(surface, wx, wy)
    gap = face_z - h
    penetration = float(max(0.0, -gap.min()))
    return np.clip(gap, 0.0, None), penetration


def branch_point_at_y(branch: VesselBranch, y: float) -> Optional[np.ndarray]:
    """First centerline crossing of the plane at scan position y, or None."""
    pts = branch.centerline_mm
    dy = pts[:, 1] - y
    for i in range(len(pts) - 1):
        y0, y1 = dy[i], dy[i + 1]
        if (y0 <= 0 < y1) or (y1 <= 0 < y0):
            t = -y0 / (y1 - y0)
            return pts[i] + t * (pts[i + 1] - pts[i])
    return None


def smooth_polyline(points: np.ndarray, samples: int = 0) -> np.ndarray:
    """Resample a polyline through a natural cubic spline (arc-length param).

    Used by scenario builders to turn sparse waypoints into smooth centerlines.
    """
    pts = np.asarray(points, dtype=float)
    if samples <= 0 or len(pts) < 3:
        return pts
    seg = np.sqrt(((np.diff(pts, axis=0)) ** 2).sum(axis=1))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    spline = CubicSpline(s, pts, axis=0)
    return spline(np.linspace(0.0, s[-1], samples))
