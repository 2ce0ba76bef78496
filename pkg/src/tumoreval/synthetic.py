"""Synthetic label volumes and survival cohorts for tests and demos.

Run ``python -m tumoreval.synthetic OUTDIR`` to write a small study
(``gt/``, ``pred/`` segmentation folders and ``survival.csv``).
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES, Dataset
from .volgrid import LabelVolume, save_volume

__all__ = ["tumor_volume", "perturb_volume", "cohort", "write_study"]


def _ellipsoid(shape, centre, radii) -> np.ndarray:
    grids = np.ogrid[tuple(slice(0, n) for n in shape)]
    acc = sum(((g - c) / r) ** 2 for g, c, r in zip(grids, centre, radii))
    return acc <= 1.0


def tumor_volume(dims=(48, 48, 32), rng=None, spacing=(1.0, 1.0, 1.0), empty: bool = False) -> LabelVolume:
    """Nested ellipsoids: edema (2) around a core (1) with an enhancing rim (4)."""
    rng = np.random.default_rng(rng)
    labels = np.zeros(dims, dtype=np.uint8)
    if not empty:
        dims_a = np.asarray(dims, dtype=float)
        centre = dims_a * rng.uniform(0.35, 0.65, 3)
        r_wt = dims_a * rng.uniform(0.12, 0.3, 3)
        r_tc = r_wt * rng.uniform(0.4, 0.8)
        r_core = r_tc * rng.uniform(0.3, 0.8)
        labels[_ellipsoid(dims, centre, r_wt)] = 2
        labels[_ellipsoid(dims, centre, r_tc)] = 4
        labels[_ellipsoid(dims, centre, r_core)] = 1
    return LabelVolume(labels, spacing)


def perturb_volume(vol: LabelVolume, rng=None, flip_fraction: float = 0.02) -> LabelVolume:
    """A plausible 'prediction': shifted by up to one voxel, with label noise near the tumor."""
    rng = np.random.default_rng(rng)
    shift = rng.integers(-1, 2, 3)
    labels = np.roll(vol.labels, tuple(int(s) for s in shift), axis=(0, 1, 2)).copy()
    near = np.argwhere(labels > 0)
    if len(near):
        k = max(1, int(flip_fraction * len(near)))
        pick = near[rng.choice(len(near), size=k, replace=False)]
        labels[tuple(pick.T)] = rng.choice(np.array([0, 1, 2, 4], dtype=np.uint8), size=k)
    return LabelVolume(labels, vol.spacing)


def cohort(n: int = 102, seed=None, age_coef: float = -9.0, wt_coef: float = -1.5e-3,
           snr: float = 5.0, intercept: float = 1100.0, include_age: bool = True) -> Dataset:
    """Synthetic GTR cohort: ``survival = intercept + age_coef*age + wt_coef*vol_wt + noise``.

    Volumes are in mm^3 and nested (ET <= TC <= WT). The noise variance is
    set so that var(signal) / var(noise) == ``snr`` on the drawn sample.
    """
    rng = np.random.default_rng(seed)
    age = np.clip(rng.normal(61.0, 12.0, n), 19.0, 86.0)
    wt = rng.lognormal(np.log(9.0e4), 0.5, n)
    tc = wt * rng.uniform(0.2, 0.8, n)
    et = tc * rng.uniform(0.1, 0.7, n)
    signal = age_coef * age + wt_coef * wt
    noise_sd = np.sqrt(np.var(signal) / snr)
    y = intercept + signal + rng.normal(0.0, noise_sd, n)
    X = np.column_stack([wt, tc, et, age])
    d = Dataset(X, y, FEATURE_NAMES, tuple(f"SYN_{i:03d}" for i in range(n)))
    return d if include_age else d.drop_feature("age")


def write_study(out_dir, n_cases: int = 10, seed: int = 0, dims=(40, 40, 28),
                n_str: int = 0, n_alive: int = 0) -> Path:
    """Write ``gt/``, ``pred/`` and ``survival.csv``.

    The study has ``n_cases`` GTR cases with numeric survival, then ``n_str``
    STR cases and ``n_alive`` GTR cases censored as ``ALIVE``.
    """
    out = Path(out_dir)
    (out / "gt").mkdir(parents=True, exist_ok=True)
    (out / "pred").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_cases + n_str + n_alive):
        case = f"BraTS19_SYN_{i:03d}"
        gt = tumor_volume(dims, rng)
        save_volume(gt, out / "gt" / f"{case}.nii.gz")
        save_volume(perturb_volume(gt, rng), out / "pred" / f"{case}.nii.gz")
        age = float(np.round(rng.uniform(30, 80), 3))
        days = float(max(30.0, np.round(1200 - 12 * age + rng.normal(0, 80))))
        status = "STR" if n_cases <= i < n_cases + n_str else "GTR"
        rows.append([case, age, "ALIVE" if i >= n_cases + n_str else days, status])
    with open(out / "survival.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["BraTS19ID", "Age", "Survival_days", "ResectionStatus"])
        w.writerows(rows)
    return out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description="write a synthetic segmentation/survival study")
    ap.add_argument("out_dir")
    ap.add_argument("--cases", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    print(write_study(args.out_dir, args.cases, args.seed))


if __name__ == "__main__":
    main()
