"""Image grid geometry and pixel/millimetre conversions.

Image arrays are row-major (depth row, lateral column). Column 0 is the
lateral left edge, row 0 the transducer face. Lateral mm coordinates are
measured from the image centerline (column (width-1)/2), depth mm from row 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ImageGeometry:
    width_px: int
    depth_px: int
    pixel_pitch_mm: float

    def __post_init__(self):
        if self.width_px < 2 or self.depth_px < 2:
            raise DomainError("image grid must be at least 2x2 px")
        if not self.pixel_pitch_mm > 0:
            raise DomainError("pixel pitch must be > 0 mm")

    @property
    def center_col(self) -> float:
        return (self.width_px - 1) / 2.0

    @property
    def width_mm(self) -> float:
        return (self.width_px - 1) * self.pixel_pitch_mm

    @property
    def depth_mm(self) -> float:
        return (self.depth_px - 1) * self.pixel_pitch_mm

    def col_to_mm(self, col):
        """Lateral offset of a column from the image centerline, in mm."""
        return (np.asarray(col, dtype=float) - self.center_col) * self.pixel_pitch_mm

    def mm_to_col(self, lateral_mm):
        return np.asarray(lateral_mm, dtype=float) / self.pixel_pitch_mm + self.center_col

    def row_to_mm(self, row):
        return np.asarray(row, dtype=float) * self.pixel_pitch_mm

    def mm_to_row(self, depth_mm):
        return np.asarray(depth_mm, dtype=float) / self.pixel_pitch_mm

    def col_offsets_mm(self) -> np.ndarray:
        """Per-column lateral offsets from the centerline, shape (width_px,)."""
        return self.col_to_mm(np.arange(self.width_px))

    def shape(self) -> tuple[int, int]:
        return (self.depth_px, self.width_px)

    def same_grid(self, other: "ImageGeometry") -> bool:
        return (
            self.width_px == other.width_px
            and self.depth_px == other.depth_px
            and self.pixel_pitch_mm == other.pixel_pitch_mm
        )
