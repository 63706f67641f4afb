"""Skin-colour gate.

A reference distribution of normalised rg-chromaticity is pooled from
face crops; a detection is kept when the Hellinger distance between its
crop's distribution and the reference is within a threshold.

Model file layout (UTF-8 text, LF line endings)::

    bodyface-skin-model 1
    bins <n_r> <n_g>
    threshold <float>
    trained_on <int>
    pixels <int>
    <n_r lines of n_g space-separated weights>

Row ``i`` holds the bins with ``floor(r * n_r) == i``.  Floats are written
with ``repr`` so a save/load cycle is exact.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

import numpy as np

from .bfd import FaceDetection
from .geometry import ImageSize, clamp_box

DEFAULT_BINS = 32
DEFAULT_DISTANCE_THRESHOLD = 0.6
_NORM_TOL = 1e-9
_MAGIC = "bodyface-skin-model 1"


class UnusableCropError(ValueError):
    """The crop has no pixel with non-zero intensity."""


class ImageUnavailableError(LookupError):
    """The image a detection refers to cannot be loaded."""


class ImagePatch:
    """An RGB byte raster, stored as a ``(height, width, 3)`` uint8 array."""

    __slots__ = ("pixels",)

    def __init__(self, pixels):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected an (h, w, 3) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("patch must be at least 1x1")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValueError("pixel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        self.pixels = arr

    @classmethod
    def uniform(cls, rgb, width: int = 1, height: int = 1) -> ImagePatch:
        return cls(np.broadcast_to(np.asarray(rgb, dtype=np.uint8), (height, width, 3)).copy())

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def size(self) -> ImageSize:
        return ImageSize(self.width, self.height)

    def crop(self, x0: int, y0: int, x1: int, y1: int) -> ImagePatch:
        return ImagePatch(self.pixels[y0:y1, x0:x1])


@dataclass(frozen=True, eq=False)
class ChromaHistogram:
    """Normalised rg-chromaticity histogram; ``total`` is the pixel weight
    that went into it."""

    bins: np.ndarray
    total: float

    def __post_init__(self):
        b = np.asarray(self.bins, dtype=np.float64)
        if b.ndim != 2:
            raise ValueError("histogram bins must be a 2-D grid")
        if np.any(b < 0) or not np.all(np.isfinite(b)):
            raise ValueError("histogram bins must be finite and non-negative")
        b.setflags(write=False)
        object.__setattr__(self, "bins", b)

    @property
    def shape(self) -> tuple[int, int]:
        return self.bins.shape

    def is_normalized(self, tol: float = _NORM_TOL) -> bool:
        return abs(float(self.bins.sum()) - 1.0) <= tol

    def __eq__(self, other):
        if not isinstance(other, ChromaHistogram):
            return NotImplemented
        return self.total == other.total and np.array_equal(self.bins, other.bins)

    __hash__ = None


def chroma_counts(patch: ImagePatch, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Integer pixel counts per (r, g) bin.  Black pixels are skipped."""
    px = patch.pixels.reshape(-1, 3).astype(np.int64)
    total = px.sum(axis=1)
    px, total = px[total > 0], total[total > 0]
    # floor(bins * R / (R+G+B)) in exact integer arithmetic
    ri = np.minimum(bins * px[:, 0] // total, bins - 1)
    gi = np.minimum(bins * px[:, 1] // total, bins - 1)
    counts = np.zeros((bins, bins), dtype=np.int64)
    np.add.at(counts, (ri, gi), 1)
    return counts


def _from_counts(counts: np.ndarray) -> ChromaHistogram:
    total = int(counts.sum())
    if total == 0:
        raise UnusableCropError("crop has no non-black pixels")
    return ChromaHistogram(counts / total, float(total))


def chroma_histogram(patch: ImagePatch, bins: int = DEFAULT_BINS) -> ChromaHistogram:
    return _from_counts(chroma_counts(patch, bins))


def hellinger_distance(a: ChromaHistogram, b: ChromaHistogram) -> float:
    """Hellinger distance between two normalised histograms, in [0, 1].

    Evaluated as ``||sqrt(a) - sqrt(b)||_2 / sqrt(2)``, which equals
    ``sqrt(1 - sum(sqrt(a_i b_i)))`` for normalised inputs but is exactly
    zero for identical histograms.
    """
    if a.shape != b.shape:
        raise ValueError(f"histogram grids differ: {a.shape} vs {b.shape}")
    for name, h in (("a", a), ("b", b)):
        if not h.is_normalized():
            raise ValueError(f"histogram {name} is not normalised (sum={h.bins.sum()!r})")
    diff = np.sqrt(a.bins) - np.sqrt(b.bins)
    return min(1.0, math.sqrt(0.5 * float(np.sum(diff * diff))))


@dataclass(frozen=True)
class SkinModel:
    reference: ChromaHistogram
    distance_threshold: float = DEFAULT_DISTANCE_THRESHOLD
    trained_on: int = 1

    def __post_init__(self):
        if not self.reference.is_normalized():
            raise ValueError("reference histogram must be normalised")
        if not 0.0 < self.distance_threshold <= 1.0:
            raise ValueError("distance_threshold must lie in (0, 1]")
        if self.trained_on < 1:
            raise ValueError("trained_on must be >= 1")

    def distance(self, patch: ImagePatch) -> float:
        return hellinger_distance(chroma_histogram(patch, self.reference.shape[0]), self.reference)


def train_skin_model(crops: Iterable[ImagePatch], threshold: float = DEFAULT_DISTANCE_THRESHOLD,
                     bins: int = DEFAULT_BINS) -> SkinModel:
    """Pool the pixel counts of every usable crop into one reference histogram.

    All-black crops are skipped; if nothing usable is left a
    UnusableCropError is raised.
    """
    pooled = np.zeros((bins, bins), dtype=np.int64)
    used = 0
    for crop in crops:
        counts = chroma_counts(crop, bins)
        if counts.sum() == 0:
            continue
        pooled += counts
        used += 1
    if used == 0:
        raise UnusableCropError("no usable crops to train on")
    return SkinModel(_from_counts(pooled), threshold, used)


ImageSource = Union[ImagePatch, Callable[[], ImagePatch]]


def crop_detection(image: ImagePatch, d: FaceDetection) -> ImagePatch:
    """Pixels covered by the detection box, after clamping it to the image."""
    box = clamp_box(d.box, image.size)
    x0, y0 = int(math.floor(box.x)), int(math.floor(box.y))
    x1 = min(image.width, int(math.ceil(box.x2)))
    y1 = min(image.height, int(math.ceil(box.y2)))
    return image.crop(x0, y0, x1, y1)


def skin_gate(d: FaceDetection, image: ImageSource, model: SkinModel) -> Optional[FaceDetection]:
    """Return ``d`` untouched if its crop looks like skin, otherwise None.

    ``image`` may be a patch or a zero-argument loader; a loader that raises
    ImageUnavailableError propagates, which is distinct from rejection.
    """
    if callable(image):
        image = image()
    try:
        dist = model.distance(crop_detection(image, d))
    except UnusableCropError:
        return None
    return d if dist <= model.distance_threshold else None


# -- persistence ------------------------------------------------------------

def dumps_skin_model(model: SkinModel) -> str:
    nr, ng = model.reference.shape
    lines = [
        _MAGIC,
        f"bins {nr} {ng}",
        f"threshold {model.distance_threshold!r}",
        f"trained_on {model.trained_on}",
        f"pixels {int(model.reference.total)}",
    ]
    for row in model.reference.bins:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def loads_skin_model(text: str) -> SkinModel:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    def field(lineno: int, key: str) -> list[str]:
        if lineno >= len(lines):
            raise ValueError(f"line {lineno + 1}: missing '{key}'")
        parts = lines[lineno].split()
        if not parts or parts[0] != key:
            raise ValueError(f"line {lineno + 1}: expected '{key}', got {lines[lineno]!r}")
        return parts[1:]

    if not lines or lines[0] != _MAGIC:
        raise ValueError("line 1: not a bodyface skin model")
    try:
        nr, ng = (int(v) for v in field(1, "bins"))
        (threshold,) = (float(v) for v in field(2, "threshold"))
        (trained_on,) = (int(v) for v in field(3, "trained_on"))
        (pixels,) = (int(v) for v in field(4, "pixels"))
    except ValueError as exc:
        raise ValueError(f"malformed skin model header: {exc}") from None
    rows = lines[5:]
    if len(rows) != nr:
        raise ValueError(f"expected {nr} weight rows, found {len(rows)}")
    grid = np.empty((nr, ng))
    for i, row in enumerate(rows):
        vals = row.split()
        if len(vals) != ng:
            raise ValueError(f"line {i + 6}: expected {ng} weights, found {len(vals)}")
        try:
            grid[i] = [float(v) for v in vals]
        except ValueError:
            raise ValueError(f"line {i + 6}: malformed weight") from None
    return SkinModel(ChromaHistogram(grid, float(pixels)), threshold, trained_on)


def save_skin_model(model: SkinModel, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_skin_model(model))


def load_skin_model(path: Union[str, os.PathLike]) -> SkinModel:
    with open(path, encoding="utf-8") as fh:
        return loads_skin_model(fh.read())
