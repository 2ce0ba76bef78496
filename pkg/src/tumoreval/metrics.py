"""Overlap and surface-distance metrics for tumor segmentations.

Per region the four reported metrics are Dice, sensitivity, specificity and
HD95. Conventions for degenerate masks:

* both masks empty: Dice, sensitivity and specificity are 1.0, HD95 is 0;
* exactly one mask empty: HD95 is a sentinel, by default the physical
  diagonal of the volume (``empty_value`` overrides it with a fixed mm value).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .edt import squared_distance_transform
from .errors import DimsMismatch, EmptyInput, SpacingMismatch
from .volgrid import LabelVolume, Region, region_mask

__all__ = [
    "METRICS",
    "ConfusionCounts",
    "RegionMetrics",
    "MetricReport",
    "SummaryStats",
    "Stat",
    "confusion",
    "dice",
    "sensitivity",
    "specificity",
    "surface_voxels",
    "surface_distances",
    "nearest_rank",
    "hd95",
    "hausdorff_percentile",
    "diagonal_sentinel",
    "evaluate_case",
    "summarize",
    "write_metrics_csv",
    "read_metrics_csv",
    "parse_empty_policy",
]

REGIONS = (Region.ET, Region.WT, Region.TC)
METRICS = ("dice", "sensitivity", "specificity", "hd95")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimsMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")


def confusion(pred: np.ndarray, gt: np.ndarray) -> ConfusionCounts:
    """Voxel counts of the 2x2 contingency table between ``pred`` and ``gt``."""
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    _check_dims(pred, gt)
    tp = int(np.count_nonzero(pred & gt))
    n_pred = int(np.count_nonzero(pred))
    n_gt = int(np.count_nonzero(gt))
    fp = n_pred - tp
    fn = n_gt - tp
    return ConfusionCounts(tp, fp, fn, pred.size - tp - fp - fn)


def dice(c: ConfusionCounts) -> float:
    """2TP / (FP + 2TP + FN); 1.0 when both masks are empty."""
    denom = c.fp + 2 * c.tp + c.fn
    return 1.0 if denom == 0 else 2 * c.tp / denom


def sensitivity(c: ConfusionCounts) -> float:
    denom = c.tp + c.fn
    return 1.0 if denom == 0 else c.tp / denom


def specificity(c: ConfusionCounts) -> float:
    denom = c.tn + c.fp
    return 1.0 if denom == 0 else c.tn / denom


# ---------------------------------------------------------------------------
# surface distances


def surface_voxels(mask: np.ndarray) -> np.ndarray:
    """Foreground voxels with at least one background 6-neighbour.

    Voxels outside the grid count as background, so foreground on the volume
    border is always surface.
    """
    mask = np.asarray(mask, dtype=bool)
    p = np.pad(mask, 1, mode="constant", constant_values=False)
    interior = (
        p[:-2, 1:-1, 1:-1]
        & p[2:, 1:-1, 1:-1]
        & p[1:-1, :-2, 1:-1]
        & p[1:-1, 2:, 1:-1]
        & p[1:-1, 1:-1, :-2]
        & p[1:-1, 1:-1, 2:]
    )
    return mask & ~interior


def _bbox(mask: np.ndarray) -> tuple[slice, ...]:
    slices = []
    for axis in range(mask.ndim):
        other = tuple(a for a in range(mask.ndim) if a != axis)
        hits = np.flatnonzero(mask.any(axis=other))
        slices.append(slice(hits[0], hits[-1] + 1))
    return tuple(slices)


def surface_distances(src: np.ndarray, dst: np.ndarray, spacing) -> np.ndarray:
    """Distance (mm) from each surface voxel of ``src`` to the surface of ``dst``.

    Both masks must be non-empty. Work is confined to the bounding box of the
    two surfaces, which leaves every nearest-neighbour distance unchanged.
    """
    s_src = surface_voxels(src)
    s_dst = surface_voxels(dst)
    box = _bbox(s_src | s_dst)
    sq = squared_distance_transform(s_dst[box], spacing)
    return np.sqrt(sq[s_src[box]])


def nearest_rank(values: np.ndarray, q: float) -> float:
    """Nearest-rank percentile: the ceil(q/100 * n)-th smallest value."""
    values = np.asarray(values, dtype=np.float64).ravel()
    n = values.size
    if n == 0:
        raise EmptyInput("percentile of an empty sample")
    if not 0 <= q <= 100:
        raise ValueError(f"percentile must be in [0, 100], got {q}")
    rank = max(1, math.ceil(Fraction(str(q)) * n / 100))
    return float(np.partition(values, rank - 1)[rank - 1])


def diagonal_sentinel(dims, spacing) -> float:
    """Physical length of the volume diagonal between the corner voxel centers."""
    return math.sqrt(sum(((n - 1) * s) ** 2 for n, s in zip(dims, spacing)))


def hausdorff_percentile(
    pred: np.ndarray,
    gt: np.ndarray,
    spacing=(1.0, 1.0, 1.0),
    q: float = 95,
    empty_value: float | None = None,
) -> float:
    """Symmetric percentile Hausdorff distance between mask surfaces, in mm.

    Returns ``max(P_q(d(pred->gt)), P_q(d(gt->pred)))``. ``q=100`` gives the
    classical Hausdorff distance.
    """
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    _check_dims(pred, gt)
    has_pred, has_gt = bool(pred.any()), bool(gt.any())
    if not has_pred and not has_gt:
        return 0.0
    if has_pred != has_gt:
        if empty_value is not None:
            return float(empty_value)
        return diagonal_sentinel(pred.shape, spacing)
    return max(
        nearest_rank(surface_distances(pred, gt, spacing), q),
        nearest_rank(surface_distances(gt, pred, spacing), q),
    )


def hd95(pred, gt, spacing=(1.0, 1.0, 1.0), empty_value: float | None = None) -> float:
    """95th-percentile symmetric surface Hausdorff distance in mm."""
    return hausdorff_percentile(pred, gt, spacing, 95, empty_value)


def parse_empty_policy(text: str) -> float | None:
    """Parse ``diagonal`` or ``fixed:<mm>`` into an ``empty_value`` argument."""
    if text == "diagonal":
        return None
    if text.startswith("fixed:"):
        value = float(text[len("fixed:"):])
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"fixed empty-mask distance must be finite and >= 0: {text!r}")
        return value
    raise ValueError(f"empty policy must be 'diagonal' or 'fixed:<mm>', got {text!r}")


# ---------------------------------------------------------------------------
# per-case reports


@dataclass(frozen=True)
class RegionMetrics:
    dice: float
    sensitivity: float
    specificity: float
    hd95: float
    counts: ConfusionCounts | None = None

    def get(self, metric: str) -> float:
        return getattr(self, metric)


@dataclass(frozen=True)
class MetricReport:
    regions: dict[Region, RegionMetrics]
    case_id: str = ""

    def __getitem__(self, region) -> RegionMetrics:
        return self.regions[Region(region)]


def _spacing_close(a, b) -> bool:
    # NIfTI keeps spacing in float32; tolerate that rounding between formats.
    return all(math.isclose(x, y, rel_tol=1e-6) for x, y in zip(a, b))


def evaluate_case(
    pred: LabelVolume,
    gt: LabelVolume,
    empty_value: float | None = None,
    case_id: str = "",
) -> MetricReport:
    """All four metrics for each of ET, WT and TC."""
    if pred.dims != gt.dims:
        raise DimsMismatch(f"volume dims differ: {pred.dims} vs {gt.dims}")
    if not _spacing_close(pred.spacing, gt.spacing):
        raise SpacingMismatch(f"voxel spacing differs: {pred.spacing} vs {gt.spacing}")
    spacing = gt.spacing
    regions = {}
    for region in REGIONS:
        p = region_mask(pred, region)
        g = region_mask(gt, region)
        c = confusion(p, g)
        regions[region] = RegionMetrics(
            dice=dice(c),
            sensitivity=sensitivity(c),
            specificity=specificity(c),
            hd95=hd95(p, g, spacing, empty_value),
            counts=c,
        )
    return MetricReport(regions, case_id)


# ---------------------------------------------------------------------------
# summary statistics


@dataclass(frozen=True)
class Stat:
    mean: float
    std: float
    median: float
    q25: float
    q75: float


@dataclass(frozen=True)
class SummaryStats:
    """Summary rows of a metric table, keyed by ``(metric, region)``."""

    stats: dict[tuple[str, Region], Stat]
    n: int = 0

    def __getitem__(self, key) -> Stat:
        metric, region = key
        return self.stats[(metric, Region(region))]


def _stat(values: Sequence[float]) -> Stat:
    arr = np.asarray(values, dtype=np.float64)
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    q25, median, q75 = np.percentile(arr, [25, 50, 75])
    return Stat(float(np.mean(arr)), std, float(median), float(q25), float(q75))


def summarize(reports: Iterable[MetricReport]) -> SummaryStats:
    """Mean, sample std and linearly interpolated quartiles per metric and region."""
    reports = list(reports)
    if not reports:
        raise EmptyInput("summarize needs at least one report")
    stats = {}
    for metric in METRICS:
        for region in REGIONS:
            stats[(metric, region)] = _stat([r[region].get(metric) for r in reports])
    return SummaryStats(stats, len(reports))


# ---------------------------------------------------------------------------
# CSV I/O

CSV_HEADER = ("case_id", "region", "dice", "sensitivity", "specificity", "hd95_mm")


def write_metrics_csv(reports: Iterable[MetricReport], path) -> None:
    """One row per case and region, values at 6 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for rep in reports:
            for region in REGIONS:
                m = rep[region]
                w.writerow(
                    [rep.case_id, region.value]
                    + [f"{v:.6g}" for v in (m.dice, m.sensitivity, m.specificity, m.hd95)]
                )


def read_metrics_csv(path) -> list[MetricReport]:
    """Inverse of :func:`write_metrics_csv` (values at CSV precision)."""
    by_case: dict[str, dict[Region, RegionMetrics]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            by_case.setdefault(row["case_id"], {})[Region(row["region"])] = RegionMetrics(
                float(row["dice"]),
                float(row["sensitivity"]),
                float(row["specificity"]),
                float(row["hd95_mm"]),
            )
    return [MetricReport(regions, case_id) for case_id, regions in by_case.items()]
