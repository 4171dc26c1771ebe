"""Loading and quality control of per-scan CT slice stacks.

A scan is a directory of grayscale image files (PNG/JPEG/BMP), one file per
slice.  Slices are ordered by natural-numeric filename order and decoded to
single-channel arrays.  Scans that decode to nothing, mix image dimensions,
or contain fewer than five slices are rejected by quality control.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

logger = logging.getLogger(__name__)

SLICE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")
MIN_SLICES = 5

LABEL_COVID = "covid"
LABEL_NON_COVID = "non-covid"
LABEL_UNKNOWN = "unknown"
LABELS = (LABEL_COVID, LABEL_NON_COVID, LABEL_UNKNOWN)

# QC rejection reasons.
REASON_INCONSISTENT_DIMENSIONS = "inconsistent_dimensions"
REASON_TOO_FEW_SLICES = "too_few_slices"
REASON_UNREADABLE_FILE = "unreadable_file"
REASON_EMPTY_SCAN = "empty_scan"

_DIGIT_RUN = re.compile(r"(\d+)")


class EmptyScanError(Exception):
    """A scan directory yielded no decodable slices."""

    def __init__(self, scan_id: str, unreadable: Sequence[str] = ()):
        self.scan_id = scan_id
        self.unreadable = tuple(unreadable)
        detail = f" ({len(self.unreadable)} unreadable files)" if self.unreadable else ""
        super().__init__(f"scan {scan_id!r} has no decodable slices{detail}")


@dataclass(frozen=True)
class QcReport:
    """Outcome of the quality-control check for one scan."""

    scan_id: str
    accepted: bool
    reasons: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class ScanVolume:
    """An ordered stack of same-source grayscale slices plus metadata.

    ``slices`` holds one 2-D uint8 or uint16 array per decoded file, in
    natural filename order.  Files that failed to decode are listed in
    ``unreadable_files``; they are recorded rather than fatal so QC can
    re-evaluate the surviving slice count.
    """

    scan_id: str
    source_id: int
    label: str
    slices: tuple[np.ndarray, ...]
    slice_files: tuple[str, ...]
    unreadable_files: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.slices)


def natural_key(name: str) -> tuple:
    """Sort key treating embedded digit runs as integers.

    Non-digit characters compare lexicographically; the raw string is
    appended as a tie-break so names that differ only in zero padding
    (``img_2`` vs ``img_002``) still order deterministically.
    """
    parts = _DIGIT_RUN.split(name)
    key = tuple(int(p) if p.isdigit() else p for p in parts)
    return (key, name)


def order_slices(filenames: Iterable[str]) -> list[str]:
    """Return ``filenames`` in natural-numeric order.

    The ordering is total and permutation-invariant: any permutation of the
    same names sorts to the identical list.
    """
    return sorted(filenames, key=natural_key)


def _decode_grayscale(img: Image.Image) -> np.ndarray:
    """Collapse a PIL image to a single-channel uint8/uint16 array.

    Color inputs are reduced with BT.601 luma weights, rounded half-up.
    """
    if img.mode in ("1", "L"):
        return np.asarray(img.convert("L"), dtype=np.uint8)
    if img.mode in ("I", "I;16", "I;16B", "I;16L", "I;16N"):
        arr = np.asarray(img)
        return arr.astype(np.uint16)
    rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    luma = rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114
    return np.floor(luma + 0.5).astype(np.uint8)


def _infer_metadata(dir_path: Path) -> tuple[int, str]:
    """Best-effort (source_id, label) from a labeled-tree directory layout."""
    label = LABEL_UNKNOWN
    source_id = -1
    parent = dir_path.parent.name
    if parent in (LABEL_COVID, LABEL_NON_COVID):
        label = parent
        try:
            source_id = int(dir_path.parent.parent.name)
        except ValueError:
            source_id = -1
    return source_id, label


def load_scan(
    dir_path: str | Path,
    scan_id: str | None = None,
    source_id: int | None = None,
    label: str | None = None,
) -> ScanVolume:
    """Load every decodable slice file under ``dir_path``.

    Files are taken in natural filename order; decode failures are recorded
    on the returned volume instead of aborting the scan.  ``source_id`` and
    ``label`` default to values inferred from a
    ``<root>/<source>/<label>/<scan>`` layout, falling back to ``-1`` /
    ``"unknown"``.

    Raises
    ------
    EmptyScanError
        If no file in the directory decodes to an image.
    """
    dir_path = Path(dir_path)
    if scan_id is None:
        scan_id = dir_path.name
    inferred_source, inferred_label = _infer_metadata(dir_path)
    if source_id is None:
        source_id = inferred_source
    if label is None:
        label = inferred_label

    names = [
        entry.name
        for entry in dir_path.iterdir()
        if entry.is_file() and entry.suffix.lower() in SLICE_EXTENSIONS
    ]
    slices: list[np.ndarray] = []
    kept_files: list[str] = []
    unreadable: list[str] = []
    for name in order_slices(names):
        path = dir_path / name
        try:
            with Image.open(path) as img:
                img.load()
                arr = _decode_grayscale(img)
        except Exception as exc:  # decode failures are data, not bugs
            logger.warning("scan %s: could not decode %s: %s", scan_id, name, exc)
            unreadable.append(name)
            continue
        slices.append(arr)
        kept_files.append(name)

    if not slices:
        raise EmptyScanError(scan_id, unreadable)
    return ScanVolume(
        scan_id=scan_id,
        source_id=source_id,
        label=label,
        slices=tuple(slices),
        slice_files=tuple(kept_files),
        unreadable_files=tuple(unreadable),
    )


def check_consistency(scan: ScanVolume) -> QcReport:
    """Apply the QC exclusion rules to a loaded scan.

    A scan is rejected when its surviving slices disagree in (height, width)
    or number fewer than :data:`MIN_SLICES`.  Recorded decode failures are
    appended as a reason only when the scan is already rejected; a surviving
    scan with some unreadable files is still accepted.
    """
    reasons: list[str] = []
    if len(scan.slices) == 0:
        reasons.append(REASON_EMPTY_SCAN)
    else:
        shapes = {s.shape for s in scan.slices}
        if len(shapes) > 1:
            reasons.append(REASON_INCONSISTENT_DIMENSIONS)
        if len(scan.slices) < MIN_SLICES:
            reasons.append(REASON_TOO_FEW_SLICES)
    if reasons and scan.unreadable_files:
        reasons.append(REASON_UNREADABLE_FILE)
    return QcReport(scan_id=scan.scan_id, accepted=not reasons, reasons=tuple(reasons))
