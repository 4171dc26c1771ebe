"""Threshold-based lung masking, hole filling, cropping, and resampling.

The binary mask marks bright (body) pixels; filling holes absorbs the dark
lung interiors into the body region, so the volume-level crop box encloses
the body including the lungs while discarding the scanner background.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage


class EmptyMaskError(Exception):
    """No foreground bit anywhere in a mask volume; the scan cannot be cropped."""


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Per-slice 0/1 mask together with the threshold that produced it."""

    bits: np.ndarray
    threshold: float

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {bits.shape}")
        object.__setattr__(self, "bits", bits.astype(bool))


@dataclass(frozen=True)
class CropBox:
    """Inclusive rectangular region shared by all slices of one scan."""

    row_min: int
    row_max: int
    col_min: int
    col_max: int

    def __post_init__(self):
        if self.row_min < 0 or self.col_min < 0:
            raise ValueError(f"crop box indices must be non-negative: {self}")
        if self.row_min > self.row_max or self.col_min > self.col_max:
            raise ValueError(f"crop box is empty: {self}")

    @classmethod
    def full_frame(cls, height: int, width: int) -> "CropBox":
        return cls(0, height - 1, 0, width - 1)

    @property
    def height(self) -> int:
        return self.row_max - self.row_min + 1

    @property
    def width(self) -> int:
        return self.col_max - self.col_min + 1

    def as_slices(self) -> tuple[slice, slice]:
        return (
            slice(self.row_min, self.row_max + 1),
            slice(self.col_min, self.col_max + 1),
        )


def binarize(filtered: np.ndarray, threshold: float) -> BinaryMask:
    """Mark every pixel with intensity >= ``threshold`` as foreground.

    A pixel exactly at the threshold maps to 1.
    """
    filtered = np.asarray(filtered)
    return BinaryMask(bits=filtered >= threshold, threshold=float(threshold))


def fill_holes(mask: BinaryMask) -> BinaryMask:
    """Turn every background pixel not 4-connected to the border into foreground.

    Border-connected background is left unchanged; the operation never clears
    a foreground bit and is idempotent.
    """
    filled = ndimage.binary_fill_holes(mask.bits)
    return BinaryMask(bits=filled, threshold=mask.threshold)


def lung_area(mask: BinaryMask, box: CropBox | None = None) -> int:
    """Count of foreground pixels, optionally restricted to a crop box."""
    bits = mask.bits
    if box is not None:
        bits = bits[box.as_slices()]
    return int(bits.sum())


def crop_box(masks: Sequence[BinaryMask]) -> CropBox:
    """Minimal axis-aligned box containing every foreground bit of every slice.

    All slices of one scan share this single volume-union box so the sampled
    slices stay spatially aligned.

    Raises
    ------
    EmptyMaskError
        If no mask in the volume has any foreground bit.
    """
    if not masks:
        raise EmptyMaskError("no masks given")
    shapes = {m.bits.shape for m in masks}
    if len(shapes) > 1:
        raise ValueError(f"masks disagree in shape: {sorted(shapes)}")
    any_bits = np.zeros(masks[0].bits.shape, dtype=bool)
    for m in masks:
        any_bits |= m.bits
    rows = np.flatnonzero(any_bits.any(axis=1))
    cols = np.flatnonzero(any_bits.any(axis=0))
    if rows.size == 0:
        raise EmptyMaskError("mask volume has no foreground bits")
    return CropBox(int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1]))


def _sample_coords(src_size: int, out_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pixel-center source coordinates for bilinear resampling, clamped."""
    scale = src_size / out_size
    coords = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    coords = np.clip(coords, 0.0, src_size - 1.0)
    lo = np.floor(coords).astype(np.intp)
    hi = np.minimum(lo + 1, src_size - 1)
    frac = coords - lo
    return lo, hi, frac


def crop_and_resize(image: np.ndarray, box: CropBox, out_size: int = 256) -> np.ndarray:
    """Extract ``box`` from ``image`` and bilinearly resample to a square.

    Sampling uses pixel-center alignment (source coordinate
    ``(i + 0.5) * scale - 0.5``, clamped to the region).  Integer inputs are
    quantized back to their dtype by round-half-up; float inputs are returned
    at full precision.  A region already at ``out_size`` passes through
    bit-identically.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {image.shape}")
    if out_size < 1:
        raise ValueError(f"out_size must be >= 1, got {out_size}")
    h, w = image.shape
    if box.row_max >= h or box.col_max >= w:
        raise ValueError(f"crop box {box} exceeds image shape {(h, w)}")
    region = image[box.as_slices()].astype(np.float64)

    r_lo, r_hi, r_frac = _sample_coords(region.shape[0], out_size)
    c_lo, c_hi, c_frac = _sample_coords(region.shape[1], out_size)
    rows = region[r_lo, :] * (1.0 - r_frac)[:, None] + region[r_hi, :] * r_frac[:, None]
    out = rows[:, c_lo] * (1.0 - c_frac)[None, :] + rows[:, c_hi] * c_frac[None, :]

    if np.issubdtype(image.dtype, np.integer):
        limit = np.iinfo(image.dtype).max
        out = np.clip(np.floor(out + 0.5), 0, limit).astype(image.dtype)
    return out
