"""Spatial noise-suppression filters applied before thresholding.

Two operators are provided: a normalized weighted-mean filter (a box filter
for uniform weights) and a sliding-window minimum filter.  Both use
replicate (clamp-to-edge) border padding so border pixels are not darkened,
which would otherwise perturb the downstream threshold near lung edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WEIGHTED_MEAN = "weighted_mean"
MINIMUM = "minimum"
FILTER_MODES = (WEIGHTED_MEAN, MINIMUM)


@dataclass(frozen=True, eq=False)
class FilterKernel:
    """A (2k+1) x (2k+1) grid of non-negative weights with radius k."""

    radius: int
    weights: np.ndarray

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"kernel radius must be >= 0, got {self.radius}")
        size = 2 * self.radius + 1
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (size, size):
            raise ValueError(
                f"weights must have shape {(size, size)}, got {weights.shape}"
            )
        if np.any(weights < 0):
            raise ValueError("kernel weights must be non-negative")
        if weights.sum() <= 0:
            raise ValueError("kernel weights must sum to a positive value")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, radius: int) -> "FilterKernel":
        """Uniform (box) kernel of the given radius."""
        size = 2 * radius + 1
        return cls(radius=radius, weights=np.ones((size, size)))


def weighted_mean_filter(image: np.ndarray, kernel: FilterKernel) -> np.ndarray:
    """Normalized weighted mean over each pixel's (2k+1)^2 neighborhood.

    Parameters
    ----------
    image : 2-D array
        Input intensities; any numeric dtype.
    kernel : FilterKernel
        Weights; the output divides by their sum, so absolute scale is
        irrelevant.

    Returns
    -------
    2-D float64 array of the same shape.  Values are kept at full real
    precision; quantization happens only if and when the result is exported.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {image.shape}")
    k = kernel.radius
    padded = np.pad(image.astype(np.float64), k, mode="edge")
    h, w = image.shape
    out = np.zeros((h, w), dtype=np.float64)
    for dp in range(2 * k + 1):
        for dq in range(2 * k + 1):
            out += kernel.weights[dp, dq] * padded[dp : dp + h, dq : dq + w]
    out /= kernel.weights.sum()
    return out


def min_filter(image: np.ndarray, radius: int) -> np.ndarray:
    """Minimum over each pixel's (2k+1)^2 replicate-padded neighborhood.

    ``radius=0`` is the identity.  The output keeps the input dtype.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {image.shape}")
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if radius == 0:
        return image.copy()
    padded = np.pad(image, radius, mode="edge")
    h, w = image.shape
    out = padded[0:h, 0:w].copy()
    for dp in range(2 * radius + 1):
        for dq in range(2 * radius + 1):
            if dp == 0 and dq == 0:
                continue
            np.minimum(out, padded[dp : dp + h, dq : dq + w], out=out)
    return out


def apply_filter(image: np.ndarray, mode: str, kernel: FilterKernel) -> np.ndarray:
    """Dispatch to the filter selected by ``mode``.

    ``minimum`` uses only the kernel's radius; ``weighted_mean`` uses its
    weights and returns float64.
    """
    if mode == WEIGHTED_MEAN:
        return weighted_mean_filter(image, kernel)
    if mode == MINIMUM:
        return min_filter(image, kernel.radius)
    raise ValueError(f"unknown filter mode {mode!r}; expected one of {FILTER_MODES}")
