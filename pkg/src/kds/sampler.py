"""Selection of a fixed number of representative slices per scan.

The per-slice lung areas are modeled with a KDE; its CDF is split into
equal-probability intervals and each interval contributes picks at its CDF
midpoints.  Everything is deterministic: no randomness, and all ties break
toward the smaller slice index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kde

AREA_QUANTILE = "area_quantile"
INDEX_WEIGHTED = "index_weighted"
SAMPLER_MODES = (AREA_QUANTILE, INDEX_WEIGHTED)

DEFAULT_N_SELECT = 8


def _default_breakpoints(n_select: int) -> tuple[float, ...]:
    return tuple(np.linspace(0.0, 1.0, n_select + 1))


@dataclass(frozen=True)
class SamplingPlan:
    """How many slices to pick and how the CDF is partitioned."""

    n_select: int = DEFAULT_N_SELECT
    breakpoints: tuple[float, ...] | None = None
    mode: str = AREA_QUANTILE

    def __post_init__(self):
        if self.n_select < 1:
            raise ValueError(f"n_select must be >= 1, got {self.n_select}")
        if self.mode not in SAMPLER_MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {SAMPLER_MODES}")
        points = self.breakpoints
        if points is None:
            points = _default_breakpoints(self.n_select)
        points = tuple(float(p) for p in points)
        if len(points) < 2 or points[0] != 0.0 or points[-1] != 1.0:
            raise ValueError("breakpoints must run from 0 to 1")
        if any(points[i] >= points[i + 1] for i in range(len(points) - 1)):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", points)


@dataclass(frozen=True)
class Selection:
    """The chosen slice indices and the CDF midpoints that produced them."""

    indices: tuple[int, ...]
    per_index_quantile: tuple[float, ...]

    def __post_init__(self):
        if len(self.indices) != len(self.per_index_quantile):
            raise ValueError("indices and quantiles must have equal length")


def largest_remainder(masses, total: int) -> list[int]:
    """Apportion ``total`` integer counts proportionally to ``masses``.

    Each count differs from its exact quota by less than one; remainder ties
    go to the lower index first.
    """
    masses = np.asarray(masses, dtype=np.float64)
    if masses.ndim != 1 or masses.size == 0:
        raise ValueError("masses must be a non-empty 1-D array")
    if np.any(masses < 0) or masses.sum() <= 0:
        raise ValueError("masses must be non-negative with a positive sum")
    if total < 0:
        raise ValueError(f"total must be >= 0, got {total}")
    quotas = total * masses / masses.sum()
    counts = np.floor(quotas).astype(int)
    leftover = total - int(counts.sum())
    if leftover:
        fractions = quotas - counts
        for idx in np.argsort(-fractions, kind="stable")[:leftover]:
            counts[idx] += 1
    return [int(c) for c in counts]


def allocate_counts(model: kde.KdeModel, plan: SamplingPlan) -> list[int]:
    """Per-interval pick counts, proportional to each interval's CDF mass.

    The plan's breakpoints are mapped to the value axis through the model's
    quantile function and the mass between consecutive boundaries is read
    back off the CDF; with equal-percentile breakpoints every interval gets
    the same count.
    """
    if model.cdf is None:
        raise ValueError("model has no CDF; call kde.cdf() first")
    boundaries = [kde.quantile(model, p) for p in plan.breakpoints]
    cdf_at = np.interp(boundaries, model.grid, model.cdf)
    masses = np.maximum(np.diff(cdf_at), 0.0)
    return largest_remainder(masses, plan.n_select)


def _midpoint_targets(plan: SamplingPlan, counts: list[int]) -> list[float]:
    """CDF midpoints for every pick, in interval order."""
    targets = []
    points = plan.breakpoints
    for k, count in enumerate(counts):
        lo, hi = points[k], points[k + 1]
        for j in range(count):
            targets.append(lo + (2 * j + 1) / (2 * count) * (hi - lo))
    return targets


def select_slices(
    areas,
    plan: SamplingPlan | None = None,
    grid_size: int = kde.DEFAULT_GRID_SIZE,
) -> Selection:
    """Pick exactly ``plan.n_select`` slice indices from a lung-area series.

    In ``area_quantile`` mode the KDE runs over the area values and each CDF
    midpoint selects the slice whose area is nearest the corresponding area
    quantile.  In ``index_weighted`` mode the KDE runs over slice indices
    with kernels weighted by normalized lung area, and midpoints select the
    nearest index on the index axis.

    Picks prefer not-yet-selected slices while any remain (so a scan with at
    least ``n_select`` slices yields distinct indices and a scan with exactly
    ``n_select`` yields all of them); shorter scans include every index once
    and fill the remaining picks with duplicates.  Ties always resolve to the
    smaller index.  The result is sorted by index.

    Raises
    ------
    ValueError
        If ``areas`` is empty (``empty_series``).
    """
    if plan is None:
        plan = SamplingPlan()
    areas = np.asarray(areas, dtype=np.float64)
    if areas.ndim != 1:
        raise ValueError(f"areas must be 1-D, got shape {areas.shape}")
    n = areas.size
    if n == 0:
        raise ValueError("empty_series: areas must contain at least one slice")

    if n == 1:
        # One slice: every pick duplicates index 0; no density to estimate.
        counts = largest_remainder(np.diff(plan.breakpoints), plan.n_select)
        targets = _midpoint_targets(plan, counts)
        return Selection(indices=(0,) * plan.n_select, per_index_quantile=tuple(targets))

    bandwidth = kde.scott_bandwidth(areas)
    if plan.mode == AREA_QUANTILE:
        samples, weights = areas, None
        axis_values = areas
    else:
        samples = np.arange(n, dtype=np.float64)
        total_area = areas.sum()
        weights = areas / total_area if total_area > 0 else None
        axis_values = samples
    model = kde.cdf(kde.estimate_density(samples, bandwidth.h, grid_size=grid_size, weights=weights))

    counts = allocate_counts(model, plan)
    targets = _midpoint_targets(plan, counts)

    selected_flags = np.zeros(n, dtype=bool)
    picks: list[tuple[int, float]] = []
    for p in targets:
        q = kde.quantile(model, p)
        distance = np.abs(axis_values - q)
        if not selected_flags.all():
            candidates = np.flatnonzero(~selected_flags)
            idx = int(candidates[np.argmin(distance[candidates])])
        else:
            idx = int(np.argmin(distance))
        selected_flags[idx] = True
        picks.append((idx, p))

    picks.sort()
    return Selection(
        indices=tuple(i for i, _ in picks),
        per_index_quantile=tuple(p for _, p in picks),
    )


def redundancy_report(total_slices: int, selected: int) -> float:
    """Percentage of slices discarded by sampling: ``100 * (1 - kept/total)``."""
    if total_slices <= 0:
        raise ValueError(f"total_slices must be > 0, got {total_slices}")
    if not 0 <= selected <= total_slices:
        raise ValueError(f"selected must be in [0, {total_slices}], got {selected}")
    return 100.0 * (1.0 - selected / total_slices)
