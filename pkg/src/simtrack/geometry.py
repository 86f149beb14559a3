"""Axis-aligned bounding-box arithmetic: area, IoU, and area ratio.

Boxes are stored as (left, top, width, height) matching the MOTChallenge
file convention; corner form is derived internally. Coordinates are real
valued and never rounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates with strictly positive extent."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"bounding box {name} must be finite, got {v!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValidationError(
                f"bounding box extent must be positive, got w={self.w}, h={self.h}"
            )

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    def as_ltwh(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    @classmethod
    def from_corners(cls, left: float, top: float, right: float, bottom: float) -> "BoundingBox":
        return cls(left, top, right - left, bottom - top)


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    """Overlap area; exactly 0 for disjoint or edge-touching boxes."""
    iw = min(a.right, b.right) - max(a.x, b.x)
    ih = min(a.bottom, b.bottom) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def _corner_area(b: BoundingBox) -> float:
    # same corner arithmetic as the intersection, so iou(a, a) == 1 exactly
    return (b.right - b.x) * (b.bottom - b.y)


def union_area(a: BoundingBox, b: BoundingBox) -> float:
    return _corner_area(a) + _corner_area(b) - intersection_area(a, b)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union, in [0, 1]; symmetric in its arguments."""
    inter = intersection_area(a, b)
    return inter / (_corner_area(a) + _corner_area(b) - inter)


def area_ratio(a: BoundingBox, b: BoundingBox) -> float:
    """min(area)/max(area), in (0, 1]; 1 iff the areas are equal."""
    aa, ab = a.area, b.area
    return min(aa, ab) / max(aa, ab)


def boxes_to_array(boxes) -> np.ndarray:
    """Stack BoundingBoxes into an (n, 4) float64 (left, top, w, h) array."""
    if len(boxes) == 0:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array([b.as_ltwh() for b in boxes], dtype=np.float64)
