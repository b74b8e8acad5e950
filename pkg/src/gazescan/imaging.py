"""B-mode frame synthesis and the scan-line confidence map.

The renderer is a radiometric stand-in, not a wave simulator: multiplicative
speckle texture on an exponentially attenuated background, hypoechoic vessel
lumens, and per-column acoustic shadowing driven by the probe-surface air gap.
Identical (cross-section, contact, seed) inputs give bit-identical frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DomainError
from .geometry import ImageGeometry
from .phantom import CrossSection

DEFAULT_GAP_LIMIT_MM = 0.3


@dataclass
class ContactModel:
    """Per-column probe-surface air gap; columns beyond gap_limit_mm shadow out."""

    gaps_mm: np.ndarray  # (width_px,)
    gap_limit_mm: float = DEFAULT_GAP_LIMIT_MM

    def coupling(self) -> np.ndarray:
        """Per-column coupling weight in [0, 1]; 1 = full contact, 0 = shadow."""
        if not self.gap_limit_mm > 0:
            raise DomainError("gap_limit_mm must be > 0")
        return np.clip(1.0 - np.asarray(self.gaps_mm, dtype=float) / self.gap_limit_mm, 0.0, 1.0)


@dataclass
class NoiseParams:
    """Renderer radiometry knobs. speckle_strength=0 disables texture."""

    speckle_strength: float = 1.0
    speckle_grain_px: float = 1.0
    gamma_shape: float = 4.0
    background: float = 0.35
    attenuation_frac: float = 0.8  # decay length as a fraction of image depth
    lumen_factor: float = 0.08  # hypoechoic multiplier inside vessels
    shadow_floor: float = 0.01  # amplitude of decoupled columns
    shadow_decay_frac: float = 0.125  # fast decay length for decoupled columns
    edge_soft_px: float = 1.2  # lumen boundary softness
    speckle_clip: tuple[float, float] = (0.2, 2.8)


@dataclass
class BModeFrame:
    intensity: np.ndarray  # (depth_px, width_px) float64 in [0, 1]
    geometry: ImageGeometry
    seed: int


@dataclass
class ConfidenceMap:
    values: np.ndarray  # (depth_px, width_px) float64 in [0, 1]
    geometry: ImageGeometry


def _speckle(rng: np.random.Generator, shape, noise: NoiseParams) -> np.ndarray:
    k = noise.gamma_shape
    s = rng.gamma(k, 1.0 / k, size=shape)
    if noise.speckle_grain_px > 0:
        s = gaussian_filter(s, noise.speckle_grain_px, mode="nearest")
    lo, hi = noise.speckle_clip
    s = np.clip(s, lo, hi)
    # per-row mean normalization keeps the depth-attenuation profile exact,
    # so row means decay deterministically instead of statistically
    s /= s.mean(axis=1, keepdims=True)
    return 1.0 + noise.speckle_strength * (s - 1.0)


def render_bmode(
    cs: CrossSection,
    contact: ContactModel,
    geom: ImageGeometry,
    seed: int,
    noise: NoiseParams | None = None,
) -> BModeFrame:
    """Synthesize one B-mode frame.

    Column radiometry blends between the coupled profile (slow exponential
    depth attenuation) and the shadow profile (small amplitude, fast decay)
    by the contact coupling weight. Lumens multiply the local intensity by
    lumen_factor with a soft edge.
    """
    noise = noise or NoiseParams()
    if len(contact.gaps_mm) != geom.width_px:
        raise DomainError("contact gap profile does not match image width")
    depth_mm = geom.depth_mm
    eta = geom.row_to_mm(np.arange(geom.depth_px))[:, None]
    w = contact.coupling()[None, :]

    lam_full = noise.attenuation_frac * depth_mm
    lam_shadow = noise.shadow_decay_frac * depth_mm
    lam = lam_shadow + (lam_full - lam_shadow) * w
    amp = noise.shadow_floor + (1.0 - noise.shadow_floor) * w
    profile = noise.background * amp * np.exp(-eta / lam)

    rng = np.random.default_rng(seed)
    tex = _speckle(rng, geom.shape(), noise)

    lumens = np.ones(geom.shape())
    cols = geom.col_offsets_mm()
    rows = geom.row_to_mm(np.arange(geom.depth_px))
    for lum in cs.lumens:
        a, b = lum.semi_axes_mm
        if a <= 0 or b <= 0:
            continue
        cu, cd = lum.center_mm
        ca, sa = np.cos(lum.angle_rad), np.sin(lum.angle_rad)
        ext_u = np.hypot(a * ca, b * sa) + 2 * noise.edge_soft_px * geom.pixel_pitch_mm
        ext_d = np.hypot(a * sa, b * ca) + 2 * noise.edge_soft_px * geom.pixel_pitch_mm
        c0 = max(0, int(np.floor(geom.mm_to_col(cu - ext_u))))
        c1 = min(geom.width_px, int(np.ceil(geom.mm_to_col(cu + ext_u))) + 1)
        r0 = max(0, int(np.floor(geom.mm_to_row(cd - ext_d))))
        r1 = min(geom.depth_px, int(np.ceil(geom.mm_to_row(cd + ext_d))) + 1)
        if c0 >= c1 or r0 >= r1:
            continue
        du = cols[c0:c1][None, :] - cu
        dd = rows[r0:r1][:, None] - cd
        uu = (du * ca + dd * sa) / a
        vv = (-du * sa + dd * ca) / b
        rho = np.sqrt(uu * uu + vv * vv)
        # approximate signed boundary distance in px, then soft coverage
        dist_px = (rho - 1.0) * (min(a, b) / geom.pixel_pitch_mm)
        cover = np.clip(0.5 - dist_px / noise.edge_soft_px, 0.0, 1.0)
        lumens[r0:r1, c0:c1] *= 1.0 - (1.0 - noise.lumen_factor) * cover

    frame = np.clip(profile * tex * lumens, 0.0, 1.0)
    return BModeFrame(intensity=frame, geometry=geom, seed=seed)


def confidence_map(frame: BModeFrame) -> ConfidenceMap:
    """Per-column cumulative-energy confidence.

    Each column maps squared intensity to an exclusive normalized prefix sum:
    confidence at row Y is one minus the energy fraction above Y, so row 0 is
    always 1 and values never increase with depth. Columns with zero total
    energy keep row 0 at 1 and drop to 0 below.
    """
    intensity = np.asarray(frame.intensity, dtype=float)
    energy = intensity * intensity
    total = energy.sum(axis=0)
    above = np.cumsum(energy, axis=0) - energy  # exclusive prefix
    values = np.zeros_like(energy)
    ok = total > 0
    values[:, ok] = 1.0 - above[:, ok] / total[ok]
    values[0, :] = 1.0
    return ConfidenceMap(values=values, geometry=frame.geometry)
