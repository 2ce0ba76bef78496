"""Seeded k-fold cross-validation and the model-comparison reports.

Out-of-fold predictions from all folds are pooled before computing RMSE and
mean/max absolute error. Prediction speed is the number of held-out
observations divided by the median wall time of repeated prediction passes;
it depends on hardware and is never part of a determinism check.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BadFoldCount, FoldError, TumorEvalError
from .features import Dataset, NormalizerParams, normalize_apply, normalize_fit
from .models import ZOO, ModelSpec
from .tables import render_grid

__all__ = [
    "CVConfig",
    "ModelReport",
    "ComparisonTable",
    "AblationTable",
    "TABLE_LAYOUTS",
    "ABLATION_FAMILIES",
    "BAG_SEED_OFFSET",
    "kfold_split",
    "cross_validate",
    "compare_models",
    "ablate_age",
    "prediction_plot_data",
    "write_plot_csv",
]

# bagging RNG seed for fold f is spec seed + cfg.seed + BAG_SEED_OFFSET + f
BAG_SEED_OFFSET = 1000
TIMING_REPEATS = 10

TABLE_LAYOUTS: dict[str, list[tuple[str, list[str]]]] = {
    "linear_and_trees": [
        ("Linear Regression Models", ["linear", "interactions", "robust", "stepwise"]),
        ("Regression Trees", ["tree_fine", "tree_medium", "tree_coarse"]),
    ],
    "svm": [
        ("SVM", ["svr_linear", "svr_quadratic", "svr_cubic", "svr_fine_gaussian",
                 "svr_medium_gaussian", "svr_coarse_gaussian"]),
    ],
    "gpr_and_ensembles": [
        ("Gaussian Process Regression Models",
         ["gpr_sq_exp", "gpr_matern52", "gpr_exponential", "gpr_rational_quadratic"]),
        ("Ensemble Trees", ["boosted", "bagged"]),
    ],
}

ABLATION_FAMILIES: dict[str, list[str]] = {
    "Linear": ["linear", "interactions", "robust", "stepwise"],
    "Regression Trees": ["tree_fine", "tree_medium", "tree_coarse"],
    "SVM": TABLE_LAYOUTS["svm"][0][1],
    "Ensemble": ["boosted", "bagged"],
    "GPR": TABLE_LAYOUTS["gpr_and_ensembles"][0][1],
}


@dataclass(frozen=True)
class CVConfig:
    k: int = 5
    seed: int = 0
    normalize_mode: str = "per_fold"
    clamp_nonneg: bool = False

    def __post_init__(self):
        if self.normalize_mode not in ("per_fold", "global"):
            raise ValueError(f"normalize_mode must be 'per_fold' or 'global', got {self.normalize_mode!r}")


def kfold_split(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Partition ``range(n)`` into ``k`` shuffled folds whose sizes differ by at most one."""
    if not 2 <= k <= n:
        raise BadFoldCount(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


@dataclass
class ModelReport:
    name: str
    rmse: float
    mae_mean: float
    mae_max: float
    pred_speed: float
    predictions: np.ndarray
    actual: np.ndarray
    fold_of: np.ndarray
    label: str = ""
    normalizers: list[NormalizerParams] = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(self.predictions.shape[0])

    def metrics(self) -> dict:
        return {
            "model": self.name,
            "rmse": self.rmse,
            "mae_mean": self.mae_mean,
            "mae_max": self.mae_max,
            "pred_speed": self.pred_speed,
        }


def _errors(y: np.ndarray, pred: np.ndarray) -> tuple[float, float, float]:
    r = y - pred
    return float(np.sqrt(np.mean(r * r))), float(np.mean(np.abs(r))), float(np.max(np.abs(r)))


def cross_validate(spec: ModelSpec, d: Dataset, cfg: CVConfig = CVConfig(),
                   folds: Sequence[np.ndarray] | None = None,
                   timing_repeats: int = TIMING_REPEATS) -> ModelReport:
    """Out-of-fold evaluation of ``spec`` on ``d``.

    ``folds`` overrides the seeded split (each case must appear in exactly
    one fold).
    """
    n = d.n
    if folds is None:
        folds = kfold_split(n, cfg.k, cfg.seed)
    folds = [np.asarray(f, dtype=np.int64) for f in folds]
    fold_of = np.full(n, -1, dtype=np.int64)
    for i, f in enumerate(folds):
        if np.any(fold_of[f] >= 0):
            raise BadFoldCount("folds overlap")
        fold_of[f] = i
    if np.any(fold_of < 0):
        raise BadFoldCount("folds do not cover every case")

    global_norm = normalize_fit(d.X) if cfg.normalize_mode == "global" else None
    pred = np.empty(n)
    fitted = []
    normalizers = []
    for i, test in enumerate(folds):
        train = np.flatnonzero(fold_of != i)
        norm = global_norm if global_norm is not None else normalize_fit(d.X[train])
        normalizers.append(norm)
        X_train = normalize_apply(norm, d.X[train])
        X_test = normalize_apply(norm, d.X[test])
        seed_offset = cfg.seed + BAG_SEED_OFFSET + i
        try:
            model = spec.fit(X_train, d.y[train], seed_offset=seed_offset)
            pred[test] = model.predict(X_test)
        except TumorEvalError as exc:
            raise FoldError(i, spec.name, exc) from exc
        fitted.append((model, X_test))
    if cfg.clamp_nonneg:
        pred = np.maximum(pred, 0.0)

    elapsed = []
    for _ in range(max(1, timing_repeats)):
        t0 = time.perf_counter()
        for model, X_test in fitted:
            model.predict(X_test)
        elapsed.append(time.perf_counter() - t0)
    speed = n / max(float(np.median(elapsed)), 1e-9)

    rmse, mae, mae_max = _errors(d.y, pred)
    return ModelReport(spec.name, rmse, mae, mae_max, speed, pred, d.y.copy(), fold_of,
                       spec.label, normalizers)


# ---------------------------------------------------------------------------
# comparison tables


@dataclass
class ComparisonTable:
    """RMSE / MAE / prediction-speed rows for an ordered list of models."""

    names: list[str]
    labels: list[str]
    rmse: list[float]
    mae: list[float]
    speed: list[float]
    mae_max: list[float] | None = None

    @classmethod
    def from_reports(cls, reports: Sequence[ModelReport]) -> "ComparisonTable":
        return cls(
            [r.name for r in reports],
            [r.label or r.name for r in reports],
            [r.rmse for r in reports],
            [r.mae_mean for r in reports],
            [r.pred_speed for r in reports],
            [r.mae_max for r in reports],
        )

    @classmethod
    def from_values(cls, names: Sequence[str], rmse, mae, speed) -> "ComparisonTable":
        """Table of zoo models with externally supplied values."""
        labels = [ZOO[n].label if n in ZOO else n for n in names]
        return cls(list(names), labels, list(rmse), list(mae), list(speed))

    def subset(self, names: Sequence[str]) -> "ComparisonTable":
        idx = [self.names.index(n) for n in names]
        pick = lambda xs: None if xs is None else [xs[i] for i in idx]  # noqa: E731
        return ComparisonTable(pick(self.names), pick(self.labels), pick(self.rmse),
                               pick(self.mae), pick(self.speed), pick(self.mae_max))

    def groups(self) -> list[tuple[str, int]] | None:
        """Column groups of the matching published layout, if the columns follow one."""
        for layout in TABLE_LAYOUTS.values():
            ordered = [n for _, members in layout for n in members if n in self.names]
            if ordered and ordered == self.names:
                return [(title, sum(n in self.names for n in members))
                        for title, members in layout if any(n in self.names for n in members)]
        return None

    def render(self) -> str:
        rows = [
            [f"{v:.2f}" for v in self.rmse],
            [f"{v:.2f}" for v in self.mae],
            [f"{v:.0f}" for v in self.speed],
        ]
        return render_grid(["RMSE", "MAE", "Pred. speed"], self.labels, rows, self.groups())

    def render_all(self) -> str:
        """Split into the published table layouts (models outside them go last)."""
        parts, used = [], set()
        for layout in TABLE_LAYOUTS.values():
            names = [n for _, members in layout for n in members if n in self.names]
            if names:
                parts.append(self.subset(names).render())
                used.update(names)
        rest = [n for n in self.names if n not in used]
        if rest:
            parts.append(self.subset(rest).render())
        return "\n".join(parts)

    def rows(self) -> list[dict]:
        mae_max = self.mae_max or [float("nan")] * len(self.names)
        return [
            {"model": n, "rmse": r, "mae_mean": m, "mae_max": mx, "pred_speed": s}
            for n, r, m, mx, s in zip(self.names, self.rmse, self.mae, mae_max, self.speed)
        ]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, ["model", "rmse", "mae_mean", "mae_max", "pred_speed"])
            w.writeheader()
            for row in self.rows():
                w.writerow({k: (v if isinstance(v, str) else repr(float(v))) for k, v in row.items()})

    @classmethod
    def read_csv(cls, path) -> "ComparisonTable":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        t = cls.from_values([r["model"] for r in rows], [float(r["rmse"]) for r in rows],
                            [float(r["mae_mean"]) for r in rows], [float(r["pred_speed"]) for r in rows])
        t.mae_max = [float(r["mae_max"]) for r in rows]
        return t

    def to_json(self) -> str:
        return json.dumps(self.rows(), indent=1)


def compare_models(specs: Iterable[ModelSpec], d: Dataset, cfg: CVConfig = CVConfig()
                   ) -> tuple[ComparisonTable, list[ModelReport]]:
    reports = [cross_validate(s, d, cfg) for s in specs]
    return ComparisonTable.from_reports(reports), reports


# ---------------------------------------------------------------------------
# age ablation


@dataclass
class AblationTable:
    families: list[str]
    with_age: list[float]
    without_age: list[float]
    best_with: list[str] = field(default_factory=list)
    best_without: list[str] = field(default_factory=list)

    def render(self) -> str:
        rows = [[f"{v:.2f}" for v in self.with_age], [f"{v:.2f}" for v in self.without_age]]
        return render_grid(["RMSE with age feature", "RMSE without age feature"],
                           self.families, rows, corner="Feature numbers")

    def rows(self) -> list[dict]:
        return [
            {"family": f, "rmse_with_age": a, "rmse_without_age": b, "best_with_age": ba,
             "best_without_age": bb}
            for f, a, b, ba, bb in zip(self.families, self.with_age, self.without_age,
                                       self.best_with or [""] * len(self.families),
                                       self.best_without or [""] * len(self.families))
        ]


def _best(reports: Mapping[str, ModelReport], names: Sequence[str]) -> tuple[float, str]:
    cands = [(reports[n].rmse, n) for n in names if n in reports]
    return min(cands) if cands else (float("nan"), "")


def ablate_age(d_with_age: Dataset, cfg: CVConfig = CVConfig(),
               families: Mapping[str, Sequence[str]] | None = None,
               with_age_reports: Mapping[str, ModelReport] | None = None,
               specs: Mapping[str, ModelSpec] | None = None) -> AblationTable:
    """Best within-family CV RMSE with and without the age column.

    ``with_age_reports`` lets callers reuse already computed with-age runs.
    """
    families = ABLATION_FAMILIES if families is None else families
    specs = ZOO if specs is None else specs
    d_without = d_with_age.drop_feature("age")
    with_reports = dict(with_age_reports or {})
    without_reports: dict[str, ModelReport] = {}
    for names in families.values():
        for name in names:
            if name not in with_reports:
                with_reports[name] = cross_validate(specs[name], d_with_age, cfg)
            without_reports[name] = cross_validate(specs[name], d_without, cfg)
    table = AblationTable(list(families), [], [])
    for names in families.values():
        rmse_a, best_a = _best(with_reports, names)
        rmse_b, best_b = _best(without_reports, names)
        table.with_age.append(rmse_a)
        table.without_age.append(rmse_b)
        table.best_with.append(best_a)
        table.best_without.append(best_b)
    return table


def prediction_plot_data(report: ModelReport) -> list[tuple[int, float, float]]:
    """(case index, predicted days, actual days), ordered by case index."""
    return [(i, float(p), float(a)) for i, (p, a) in enumerate(zip(report.predictions, report.actual))]


def write_plot_csv(report: ModelReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case_index", "predicted_days", "actual_days"])
        for i, p, a in prediction_plot_data(report):
            w.writerow([i, repr(p), repr(a)])
