"""Box geometry and IoU.

Coordinates follow the usual image convention: origin at the top-left,
y grows downward, boxes are ``(x, y, w, h)`` with the left/top edge
inclusive.  Geometry is continuous; nothing here rounds to pixels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

#: UCCS frames are 5184x3456; used wherever an image size is not given.
DEFAULT_IMAGE_WIDTH = 5184
DEFAULT_IMAGE_HEIGHT = 3456


class InvalidBoxError(ValueError):
    """A box violates its invariants or lies outside the image."""


def _check_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        _check_finite(x=self.x, y=self.y)

    def distance(self, other: Point2D) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def translated(self, dx: float, dy: float) -> Point2D:
        return Point2D(self.x + dx, self.y + dy)


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        _check_finite(x=self.x, y=self.y, w=self.w, h=self.h)
        if self.w <= 0 or self.h <= 0:
            raise InvalidBoxError(f"box needs w > 0 and h > 0, got w={self.w!r} h={self.h!r}")

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> BoundingBox:
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> Point2D:
        return Point2D(self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def side(self) -> float:
        """Longest side, the measure the size gate uses."""
        return max(self.w, self.h)

    def translated(self, dx: float, dy: float) -> BoundingBox:
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class ImageSize:
    width: int = DEFAULT_IMAGE_WIDTH
    height: int = DEFAULT_IMAGE_HEIGHT

    def __post_init__(self):
        if int(self.width) != self.width or int(self.height) != self.height:
            raise ValueError("image dimensions must be integers")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be >= 1, got {self.width}x{self.height}")


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    # areas from the same edge arithmetic as the intersection, so iou(a, a) == 1 exactly
    union = (a.x2 - a.x) * (a.y2 - a.y) + (b.x2 - b.x) * (b.y2 - b.y) - inter
    return min(1.0, inter / union)


def clamp_box(b: BoundingBox, size: ImageSize) -> BoundingBox:
    """Clip ``b`` to the image rectangle ``[0, width] x [0, height]``.

    Raises InvalidBoxError when nothing of the box is left inside the image.
    """
    x0 = max(b.x, 0.0)
    y0 = max(b.y, 0.0)
    x1 = min(b.x2, float(size.width))
    y1 = min(b.y2, float(size.height))
    if x1 <= x0 or y1 <= y0:
        raise InvalidBoxError(f"box {b.as_tuple()} does not intersect a {size.width}x{size.height} image")
    if (x0, y0, x1, y1) == (b.x, b.y, b.x2, b.y2):
        return b
    return BoundingBox(x0, y0, x1 - x0, y1 - y0)
