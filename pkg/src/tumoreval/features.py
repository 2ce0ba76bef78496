"""Survival feature vectors: tumor sub-region volumes plus patient age.

The survival table follows the BraTS'19 layout
(``BraTS19ID,Age,Survival_days,ResectionStatus``). Only gross total
resections with a numeric survival time enter the regression cohort.
"""
from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateData, MalformedCsv, MissingColumn, MissingSegmentation
from .volgrid import LabelVolume, Region, region_mask

__all__ = [
    "Resection",
    "SurvivalRecord",
    "FeatureRow",
    "NormalizerParams",
    "Dataset",
    "FEATURE_NAMES",
    "extract_volumes",
    "load_survival_csv",
    "filter_gtr",
    "normalize_fit",
    "normalize_apply",
    "build_dataset",
    "write_feature_csv",
    "load_feature_csv",
]

log = logging.getLogger(__name__)

SURVIVAL_COLUMNS = ("BraTS19ID", "Age", "Survival_days", "ResectionStatus")
FEATURE_NAMES = ("vol_wt", "vol_tc", "vol_et", "age")
FEATURE_CSV_HEADER = ("case_id", "vol_wt_mm3", "vol_tc_mm3", "vol_et_mm3", "age", "survival_days")


class Resection(str, enum.Enum):
    GTR = "GTR"
    STR = "STR"
    NA = "NA"

    @classmethod
    def parse(cls, text: str) -> "Resection":
        text = (text or "").strip().upper()
        if text == "GTR":
            return cls.GTR
        if text == "STR":
            return cls.STR
        return cls.NA


@dataclass(frozen=True)
class SurvivalRecord:
    case_id: str
    age: float
    survival_days: float
    resection: Resection = Resection.GTR

    def __post_init__(self):
        if not 0 < self.age < 130:
            raise ValueError(f"{self.case_id}: age {self.age} outside (0, 130)")
        if not self.survival_days > 0:
            raise ValueError(f"{self.case_id}: survival_days must be positive")


@dataclass(frozen=True)
class FeatureRow:
    vol_wt: float
    vol_tc: float
    vol_et: float
    age: float


@dataclass(frozen=True)
class NormalizerParams:
    min: np.ndarray
    max: np.ndarray

    def to_dict(self) -> dict:
        return {"min": self.min.tolist(), "max": self.max.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizerParams":
        return cls(np.asarray(d["min"], dtype=float), np.asarray(d["max"], dtype=float))


@dataclass
class Dataset:
    """Design matrix ``X`` (one row per case), survival targets ``y`` in days."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    case_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0] or self.y.ndim != 1:
            raise ValueError(f"X {self.X.shape} and y {self.y.shape} do not align")
        if self.X.shape[1] != len(self.feature_names):
            raise ValueError("feature_names must name every column of X")
        if not (np.isfinite(self.X).all() and np.isfinite(self.y).all()):
            raise DegenerateData("dataset contains NaN or infinite values")
        if not self.case_ids:
            self.case_ids = tuple(str(i) for i in range(self.n))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def drop_feature(self, name: str) -> "Dataset":
        j = self.feature_names.index(name)
        keep = [i for i in range(self.X.shape[1]) if i != j]
        return Dataset(
            self.X[:, keep],
            self.y,
            tuple(self.feature_names[i] for i in keep),
            self.case_ids,
        )


def extract_volumes(vol: LabelVolume) -> tuple[float, float, float]:
    """(WT, TC, ET) volumes in mm^3."""
    voxel = vol.voxel_volume
    return tuple(
        float(np.count_nonzero(region_mask(vol, r))) * voxel
        for r in (Region.WT, Region.TC, Region.ET)
    )


def load_survival_csv(path) -> list[SurvivalRecord]:
    """Parse a survival table, skipping rows whose survival is not a number.

    Censored entries such as ``ALIVE`` are dropped and counted in a logged
    warning.
    """
    records = []
    skipped = 0
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise MalformedCsv(f"{path}: empty file")
        names = [c.strip() for c in reader.fieldnames]
        for col in SURVIVAL_COLUMNS:
            if col not in names:
                raise MissingColumn(f"{path}: missing column {col!r}")
        reader.fieldnames = names
        for lineno, row in enumerate(reader, start=2):
            if None in row or any(row.get(c) is None for c in SURVIVAL_COLUMNS):
                raise MalformedCsv(f"{path}:{lineno}: wrong number of fields")
            case_id = row["BraTS19ID"].strip()
            try:
                survival = float(row["Survival_days"])
            except ValueError:
                skipped += 1
                continue
            if not math.isfinite(survival) or survival <= 0:
                skipped += 1
                continue
            try:
                age = float(row["Age"])
                records.append(
                    SurvivalRecord(case_id, age, survival, Resection.parse(row["ResectionStatus"]))
                )
            except ValueError as exc:
                raise MalformedCsv(f"{path}:{lineno}: {exc}") from exc
    if skipped:
        log.warning("%s: skipped %d rows with non-numeric survival", path, skipped)
    return records


def filter_gtr(records: Iterable[SurvivalRecord]) -> list[SurvivalRecord]:
    return [
        r for r in records
        if r.resection is Resection.GTR and math.isfinite(r.survival_days)
    ]


def normalize_fit(X: np.ndarray) -> NormalizerParams:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DegenerateData("normalizer needs at least one row")
    return NormalizerParams(X.min(axis=0), X.max(axis=0))


def normalize_apply(params: NormalizerParams, X: np.ndarray) -> np.ndarray:
    """Affine map (x - min) / (max - min); constant columns map to 0, no clamping."""
    X = np.asarray(X, dtype=np.float64)
    span = params.max - params.min
    safe = np.where(span > 0, span, 1.0)
    out = (X - params.min) / safe
    out[:, span <= 0] = 0.0
    return out


def build_dataset(
    records: Sequence[SurvivalRecord],
    volumes_by_id: Mapping[str, LabelVolume | Sequence[float]],
    include_age: bool = True,
) -> Dataset:
    """Assemble ``X = (vol_wt, vol_tc, vol_et[, age])`` and ``y = survival_days``.

    ``volumes_by_id`` maps case id to either a :class:`LabelVolume` or an
    already-extracted ``(wt, tc, et)`` triple. Rows are sorted by case id.
    """
    rows, y, ids = [], [], []
    for rec in sorted(records, key=lambda r: r.case_id):
        if rec.case_id not in volumes_by_id:
            raise MissingSegmentation(rec.case_id)
        v = volumes_by_id[rec.case_id]
        vols = extract_volumes(v) if isinstance(v, LabelVolume) else tuple(float(x) for x in v)
        rows.append(list(vols) + ([rec.age] if include_age else []))
        y.append(rec.survival_days)
        ids.append(rec.case_id)
    names = FEATURE_NAMES if include_age else FEATURE_NAMES[:3]
    X = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(names))
    return Dataset(X, np.asarray(y, dtype=np.float64), names, tuple(ids))


def write_feature_csv(records: Sequence[SurvivalRecord], volumes_by_id, path) -> int:
    """Write the feature table for ``records``; returns the number of rows."""
    d = build_dataset(records, volumes_by_id, include_age=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FEATURE_CSV_HEADER)
        for case_id, x, target in zip(d.case_ids, d.X, d.y):
            w.writerow([case_id] + [repr(float(v)) for v in x] + [repr(float(target))])
    return d.n


def load_feature_csv(path, include_age: bool = True) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(FEATURE_CSV_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise MissingColumn(f"{path}: missing columns {sorted(missing)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((row["case_id"], [float(row[c]) for c in FEATURE_CSV_HEADER[1:]]))
            except (TypeError, ValueError) as exc:
                raise MalformedCsv(f"{path}:{lineno}: {exc}") from exc
    rows.sort(key=lambda r: r[0])
    vals = np.asarray([v for _, v in rows], dtype=np.float64).reshape(len(rows), 5)
    ncol = 4 if include_age else 3
    return Dataset(
        vals[:, :ncol],
        vals[:, 4],
        FEATURE_NAMES[:ncol],
        tuple(cid for cid, _ in rows),
    )
