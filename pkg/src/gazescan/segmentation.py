"""Classical vessel candidate detection and attention-gated selection.

Candidates are dark (hypoechoic) blobs: adaptive per-row threshold against
the row median, morphological open/close, 4-connected components, then area
and eccentricity filters. Pixels whose scan-line confidence falls below a
floor are excluded, which removes acoustic-shadow artifacts. Selection picks
the candidate with the most attention mass over its dilated mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .attention import KIND_ZERO, AttentionHeatmap
from .errors import DomainError
from .geometry import ImageGeometry
from .imaging import BModeFrame, ConfidenceMap, confidence_map

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def disk(radius_px: int) -> np.ndarray:
    r = int(radius_px)
    yy, xx = np.ogrid[-r : r + 1, -r : r + 1]
    return xx * xx + yy * yy <= r * r


def dilate_mask(mask: np.ndarray, radius_px: int) -> np.ndarray:
    """Binary dilation by a disk, done on a padded bounding box for speed."""
    if radius_px <= 0:
        return mask
    rows, cols = np.nonzero(mask)
    if len(rows) == 0:
        return mask.copy()
    h, w = mask.shape
    r = int(radius_px)
    r0, r1 = max(0, rows.min() - r), min(h, rows.max() + r + 1)
    c0, c1 = max(0, cols.min() - r), min(w, cols.max() + r + 1)
    out = np.zeros_like(mask)
    out[r0:r1, c0:c1] = ndimage.binary_dilation(mask[r0:r1, c0:c1], structure=disk(r))
    return out


@dataclass
class SegmentationParams:
    confidence_floor: float = 0.2
    dark_ratio: float = 0.45  # threshold vs per-row median
    area_min_px: int = 100
    area_max_px: int = 4200
    eccentricity_max: float = 0.9
    top_margin_mm: float = 3.0  # near-field guard: skip rows hugging the face
    score_floor: float = 25.0  # attention mass below this means "no target"
    dilate_px: int = 8

    @classmethod
    def for_geometry(
        cls, geom: ImageGeometry, r_min_mm: float = 1.0, r_max_mm: float = 5.0, **kw
    ) -> "SegmentationParams":
        """Area band for circular lumens with radii in [r_min_mm, r_max_mm]."""
        a_min = int(0.7 * math.pi * (r_min_mm / geom.pixel_pitch_mm) ** 2)
        a_max = int(1.3 * math.pi * (r_max_mm / geom.pixel_pitch_mm) ** 2)
        return cls(area_min_px=a_min, area_max_px=a_max, **kw)


@dataclass
class Candidate:
    mask: np.ndarray  # bool (depth_px, width_px)
    centroid_px: tuple[float, float]  # (col, row)
    area_px: int
    branch_id: Optional[int] = None  # tracker-assigned identity
    _dilated: dict = field(default_factory=dict, repr=False)

    def dilated(self, radius_px: int) -> np.ndarray:
        if radius_px not in self._dilated:
            self._dilated[radius_px] = dilate_mask(self.mask, radius_px)
        return self._dilated[radius_px]


@dataclass
class SegmentationResult:
    candidates: list[Candidate]
    selected: Optional[int]  # index into candidates, None = all-candidates mode
    attention_used: str  # heatmap kind that drove (or skipped) selection


def _eccentricity(mask: np.ndarray) -> float:
    rows, cols = np.nonzero(mask)
    if len(rows) < 3:
        return 1.0
    c = np.cov(np.vstack([cols, rows]).astype(float))
    evals = np.linalg.eigvalsh(c)
    lam2, lam1 = max(evals[0], 0.0), max(evals[1], 1e-12)
    return float(np.sqrt(max(0.0, 1.0 - lam2 / lam1)))


def detect_candidates(
    frame: BModeFrame,
    cmap: Optional[ConfidenceMap] = None,
    params: Optional[SegmentationParams] = None,
) -> list[Candidate]:
    """Hypoechoic blob candidates in one frame, in label-scan order."""
    params = params or SegmentationParams()
    if cmap is None:
        cmap = confidence_map(frame)
    if not cmap.geometry.same_grid(frame.geometry):
        raise DomainError("confidence map geometry does not match the frame")
    intensity = frame.intensity
    valid = cmap.values >= params.confidence_floor
    top_rows = int(frame.geometry.mm_to_row(params.top_margin_mm))
    valid[: min(top_rows, frame.geometry.depth_px), :] = False

    masked = np.where(valid, intensity, np.nan)
    row_has = valid.any(axis=1)
    row_med = np.zeros(frame.geometry.depth_px)
    if row_has.any():
        row_med[row_has] = np.nanmedian(masked[row_has], axis=1)
    dark = valid & (intensity < params.dark_ratio * row_med[:, None])

    dark = ndimage.binary_opening(dark, structure=_FOUR_CONN)
    dark = ndimage.binary_closing(dark, structure=_FOUR_CONN)
    labels, n = ndimage.label(dark, structure=_FOUR_CONN)

    out: list[Candidate] = []
    for lab in range(1, n + 1):
        mask = labels == lab
        area = int(mask.sum())
        if area < params.area_min_px or area > params.area_max_px:
            continue
        if _eccentricity(mask) > params.eccentricity_max:
            continue
        rows, cols = np.nonzero(mask)
        out.append(
            Candidate(
                mask=mask,
                centroid_px=(float(cols.mean()), float(rows.mean())),
                area_px=area,
            )
        )
    return out


def attention_mass(att: AttentionHeatmap, cand: "Candidate", dilate_px: int) -> float:
    """Attention sum over the candidate's dilated mask."""
    return float(att.values[cand.dilated(dilate_px)].sum())


def segment(
    frame: BModeFrame,
    att: AttentionHeatmap,
    candidates: Optional[list[Candidate]] = None,
    cmap: Optional[ConfidenceMap] = None,
    params: Optional[SegmentationParams] = None,
) -> SegmentationResult:
    """Detect candidates and pick the attention-selected target.

    A zero heatmap (or a best attention score below score_floor) yields
    all-candidates mode: every candidate reported, none selected.
    """
    params = params or SegmentationParams()
    if not att.geometry.same_grid(frame.geometry):
        raise DomainError("attention heatmap geometry does not match the frame")
    if candidates is None:
        candidates = detect_candidates(frame, cmap=cmap, params=params)
    if att.kind == KIND_ZERO or not candidates:
        return SegmentationResult(candidates=candidates, selected=None, attention_used=att.kind)

    scores = [attention_mass(att, c, params.dilate_px) for c in candidates]
    best = max(scores)
    if best < params.score_floor:
        return SegmentationResult(candidates=candidates, selected=None, attention_used=att.kind)
    peak_row, peak_col = np.unravel_index(int(np.argmax(att.values)), att.values.shape)
    # ties resolved by centroid distance to the attention peak
    order = sorted(
        range(len(candidates)),
        key=lambda i: (
            -scores[i],
            math.hypot(
                candidates[i].centroid_px[0] - peak_col, candidates[i].centroid_px[1] - peak_row
            ),
        ),
    )
    return SegmentationResult(candidates=candidates, selected=order[0], attention_used=att.kind)


def dice(a: np.ndarray, b: np.ndarray) -> float:
    """Dice overlap of two binary masks; two empty masks count as 1.0."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DomainError(f"mask shapes differ: {a.shape} vs {b.shape}")
    sa, sb = int(a.sum()), int(b.sum())
    if sa + sb == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / (sa + sb)


@dataclass
class CandidateTracker:
    """Assigns stable integer ids to candidates via centroid continuity.

    Greedy nearest match against recently seen centroids; unmatched candidates
    get fresh ids. A blob that splits keeps its id on the nearest child.
    """

    match_radius_px: float = 20.0
    memory_ticks: int = 15
    _next_id: int = 1
    _known: dict = field(default_factory=dict)  # id -> (centroid, age)

    def update(self, candidates: list[Candidate]) -> list[Candidate]:
        for key in list(self._known):
            cen, age = self._known[key]
            if age >= self.memory_ticks:
                del self._known[key]
            else:
                self._known[key] = (cen, age + 1)

        pairs = []
        for ci, cand in enumerate(candidates):
            for key, (cen, _age) in self._known.items():
                d = math.hypot(cand.centroid_px[0] - cen[0], cand.centroid_px[1] - cen[1])
                if d <= self.match_radius_px:
                    pairs.append((d, ci, key))
        pairs.sort()
        used_c, used_k = set(), set()
        for d, ci, key in pairs:
            if ci in used_c or key in used_k:
                continue
            used_c.add(ci)
            used_k.add(key)
            candidates[ci].branch_id = key
        for ci, cand in enumerate(candidates):
            if ci not in used_c:
                cand.branch_id = self._next_id
                self._next_id += 1
        for cand in candidates:
            self._known[cand.branch_id] = (cand.centroid_px, 0)
        return candidates

    def reset(self) -> None:
        self._known.clear()
        self._next_id = 1
