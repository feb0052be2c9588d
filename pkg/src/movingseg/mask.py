"""Run-length encoded binary masks and the pixel arithmetic built on them.

A mask is stored as alternating run counts over the row-major pixel order,
starting with a (possibly zero) count of background pixels.  The encoding is
canonical: a given pixel set has exactly one valid ``runs`` tuple.  All
per-pair operations (intersection, IoU) work directly on run boundaries and
never touch a dense pixel grid; this is what keeps evaluation over long
high-resolution sequences cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class MaskError(ValueError):
    """Base class for mask construction and usage errors."""


class MalformedMaskError(MaskError):
    """Runs list violates the encoding invariants."""


class DimensionMismatchError(MaskError):
    """Operands do not share width/height."""


@dataclass(frozen=True)
class Mask:
    """An immutable single-frame binary region.

    ``runs`` alternates background/foreground counts in row-major scan order;
    the first entry is the leading background count and is the only entry
    allowed to be zero.  ``sum(runs) == width * height`` always holds.
    """

    width: int
    height: int
    runs: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "runs", tuple(int(r) for r in self.runs))
        if self.width <= 0 or self.height <= 0:
            raise MalformedMaskError(f"non-positive dimensions {self.width}x{self.height}")
        if not self.runs:
            raise MalformedMaskError("empty runs list")
        if any(r < 0 for r in self.runs):
            raise MalformedMaskError("negative run length")
        if any(r == 0 for r in self.runs[1:]):
            raise MalformedMaskError("zero-length interior run")
        total = sum(self.runs)
        if total != self.width * self.height:
            raise MalformedMaskError(
                f"runs sum {total} != width*height {self.width * self.height}"
            )

    @cached_property
    def foreground_cuts(self) -> np.ndarray:
        """Sorted flat pixel offsets [s0, e0, s1, e1, ...] of foreground runs."""
        cum = np.cumsum(np.asarray(self.runs, dtype=np.int64))
        if len(cum) % 2:  # trailing background run closes at width*height
            cum = cum[:-1]
        return cum

    @property
    def is_empty(self) -> bool:
        return len(self.runs) == 1


def rle_encode(dense, width: int, height: int) -> Mask:
    """Encode a row-major 0/1 grid into its canonical Mask."""
    arr = np.asarray(dense)
    if arr.ndim == 2 and arr.shape != (height, width):
        raise DimensionMismatchError(f"grid shape {arr.shape} != ({height}, {width})")
    flat = arr.ravel()
    if flat.size != width * height:
        raise DimensionMismatchError(
            f"grid has {flat.size} entries, expected {width * height}"
        )
    if flat.dtype != bool:
        if not np.isin(flat, (0, 1)).all():
            raise MalformedMaskError("grid entries must be 0 or 1")
        flat = flat.astype(bool)
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds)
    if flat[0]:
        runs = np.concatenate(([0], runs))
    return Mask(width, height, tuple(int(r) for r in runs))


def rle_decode(mask: Mask) -> np.ndarray:
    """Expand a Mask into a height x width uint8 grid."""
    values = np.arange(len(mask.runs), dtype=np.uint8) % 2
    flat = np.repeat(values, np.asarray(mask.runs, dtype=np.int64))
    return flat.reshape(mask.height, mask.width)


def area(mask: Mask) -> int:
    """Number of foreground pixels."""
    return int(sum(mask.runs[1::2]))


def _require_same_dims(a: Mask, b: Mask) -> None:
    if a.width != b.width or a.height != b.height:
        raise DimensionMismatchError(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def intersect_cuts(a: np.ndarray, b: np.ndarray) -> int:
    """Overlap, in pixels, of two foreground interval sets (run-merge, no decode)."""
    if len(a) == 0 or len(b) == 0:
        return 0
    if a[-1] <= b[0] or b[-1] <= a[0]:
        return 0
    points = np.unique(np.concatenate((a, b)))
    inside_a = np.searchsorted(a, points[:-1], side="right") % 2 == 1
    inside_b = np.searchsorted(b, points[:-1], side="right") % 2 == 1
    return int(np.sum(np.diff(points) * (inside_a & inside_b)))


def intersection_area(a: Mask, b: Mask) -> int:
    """Pixels set in both masks."""
    _require_same_dims(a, b)
    return intersect_cuts(a.foreground_cuts, b.foreground_cuts)


def iou(a: Mask, b: Mask) -> float:
    """Intersection over union; 0.0 when both masks are empty."""
    _require_same_dims(a, b)
    inter = intersection_area(a, b)
    union = area(a) + area(b) - inter
    if union == 0:
        return 0.0
    return inter / union


def union_merge(masks, *, width: int | None = None, height: int | None = None) -> Mask:
    """Pixelwise OR of masks sharing one frame size.

    An empty input list yields the empty mask of the stated dimensions.
    """
    masks = list(masks)
    if not masks:
        if width is None or height is None:
            raise DimensionMismatchError("empty mask list requires explicit width/height")
        return Mask(width, height, (width * height,))
    first = masks[0]
    if width is not None and (width != first.width or height != first.height):
        raise DimensionMismatchError("stated dimensions disagree with masks")
    for m in masks[1:]:
        _require_same_dims(first, m)
    total = first.width * first.height
    cut_arrays = [m.foreground_cuts for m in masks if not m.is_empty]
    if not cut_arrays:
        return Mask(first.width, first.height, (total,))
    points = np.unique(np.concatenate([np.array([0, total], dtype=np.int64)] + cut_arrays))
    inside = np.zeros(len(points) - 1, dtype=bool)
    for cuts in cut_arrays:
        inside |= np.searchsorted(cuts, points[:-1], side="right") % 2 == 1
    keep = np.concatenate(([True], inside[1:] != inside[:-1]))
    starts = points[:-1][keep]
    bounds = np.append(starts, total)
    runs = np.diff(bounds)
    if inside[0]:
        runs = np.concatenate(([0], runs))
    return Mask(first.width, first.height, tuple(int(r) for r in runs))


def bbox(mask: Mask) -> tuple[int, int, int, int] | None:
    """Tight (x0, y0, x1, y1) inclusive bounds of the foreground, None if empty."""
    cuts = mask.foreground_cuts
    if not len(cuts):
        return None
    w = mask.width
    starts, ends = cuts[0::2], cuts[1::2] - 1   # ends inclusive
    row_s, row_e = starts // w, ends // w
    y0, y1 = int(row_s.min()), int(row_e.max())
    if (row_e > row_s).any():   # a run wrapping rows spans the full width
        return 0, y0, w - 1, y1
    return int((starts % w).min()), y0, int((ends % w).max()), y1


def mask_from_cuts(cuts: np.ndarray, width: int, height: int) -> Mask:
    """Build a Mask from sorted foreground interval boundaries [s0,e0,s1,e1,...].

    Adjacent intervals (e_i == s_{i+1}) are merged so the result is canonical.
    """
    total = width * height
    cuts = np.asarray(cuts, dtype=np.int64)
    # drop seam points shared by touching (or empty) intervals
    while len(cuts):
        dup_at = np.flatnonzero(cuts[1:] == cuts[:-1])
        if not len(dup_at):
            break
        keep = np.ones(len(cuts), dtype=bool)
        keep[dup_at] = False
        keep[dup_at + 1] = False
        cuts = cuts[keep]
    if len(cuts) == 0:
        return Mask(width, height, (total,))
    runs = [int(cuts[0])]
    runs.extend(int(d) for d in np.diff(cuts))
    tail = total - int(cuts[-1])
    if tail > 0:
        runs.append(tail)
    return Mask(width, height, tuple(runs))
