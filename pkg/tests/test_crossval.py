import csv

import numpy as np
import pytest

from tumoreval.crossval import (
    ABLATION_FAMILIES,
    CVConfig,
    ComparisonTable,
    ablate_age,
    compare_models,
    cross_validate,
    kfold_split,
    prediction_plot_data,
    write_plot_csv,
)
from tumoreval.errors import BadFoldCount, FoldError
from tumoreval.features import Dataset, normalize_fit
from tumoreval.models import ZOO, Family, ModelSpec
from tumoreval.synthetic import cohort

MEAN_MODEL = ModelSpec(Family.TREE, {"min_leaf": 10**6}, "mean", "Mean")


def test_kfold_even_split():
    folds = kfold_split(10, 5, 0)
    assert [len(f) for f in folds] == [2] * 5


def test_kfold_102():
    folds = kfold_split(102, 5, 3)
    assert sorted(len(f) for f in folds) == [20, 20, 20, 21, 21]
    assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(102))


def test_kfold_seeded():
    a, b = kfold_split(30, 5, 9), kfold_split(30, 5, 9)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not all(np.array_equal(x, y) for x, y in zip(a, kfold_split(30, 5, 10)))


@pytest.mark.parametrize("n,k", [(4, 5), (10, 1)])
def test_kfold_bad_count(n, k):
    with pytest.raises(BadFoldCount):
        kfold_split(n, k, 0)


def test_perfect_feature(rng):
    y = rng.uniform(100, 1000, 40)
    d = Dataset(y[:, None], y, ("y",))
    assert cross_validate(ZOO["linear"], d).rmse <= 1e-6


def test_mean_model_vs_independent_computation(rng):
    d = cohort(50, seed=1)
    cfg = CVConfig(seed=4)
    r = cross_validate(MEAN_MODEL, d, cfg)
    resid = np.empty(d.n)
    for f in kfold_split(d.n, 5, 4):
        train = np.setdiff1d(np.arange(d.n), f)
        resid[f] = d.y[f] - d.y[train].mean()
    assert r.rmse == pytest.approx(np.sqrt(np.mean(resid ** 2)), rel=1e-12)
    assert r.rmse >= np.std(d.y) * (1 - 2 / np.sqrt(d.n))


def test_report_invariants():
    d = cohort(60, seed=2)
    r = cross_validate(ZOO["stepwise"], d, CVConfig(seed=1))
    assert r.rmse >= 0 and r.pred_speed > 0
    assert r.mae_max >= r.rmse >= r.mae_mean
    assert r.rmse ** 2 >= r.mae_mean ** 2
    assert r.predictions.shape == (d.n,)
    assert np.bincount(r.fold_of).tolist() == [12] * 5


def test_determinism_bitwise():
    d = cohort(80, seed=5)
    for name in ("stepwise", "bagged", "gpr_matern52", "svr_cubic"):
        a = cross_validate(ZOO[name], d, CVConfig(seed=17))
        b = cross_validate(ZOO[name], d, CVConfig(seed=17))
        assert (a.rmse, a.mae_mean, a.mae_max) == (b.rmse, b.mae_mean, b.mae_max)
        np.testing.assert_array_equal(a.predictions, b.predictions)


def test_seed_changes_bagging_and_folds():
    d = cohort(40, seed=5)
    a = cross_validate(ZOO["bagged"], d, CVConfig(seed=1))
    b = cross_validate(ZOO["bagged"], d, CVConfig(seed=2))
    assert not np.array_equal(a.predictions, b.predictions)


def test_per_fold_normalizer_ignores_held_out_rows():
    d = cohort(50, seed=6)
    cfg = CVConfig(seed=3)
    folds = kfold_split(d.n, 5, 3)
    base = cross_validate(ZOO["linear"], d, cfg)
    for i, held in enumerate(folds):
        X = d.X.copy()
        X[held] = X[held] * 1000 + 1e6
        mutated = cross_validate(ZOO["linear"], Dataset(X, d.y, d.feature_names, d.case_ids), cfg)
        np.testing.assert_array_equal(mutated.normalizers[i].min, base.normalizers[i].min)
        np.testing.assert_array_equal(mutated.normalizers[i].max, base.normalizers[i].max)
        train = np.setdiff1d(np.arange(d.n), held)
        ref = normalize_fit(d.X[train])
        np.testing.assert_array_equal(base.normalizers[i].min, ref.min)


def test_global_normalization_uses_all_rows():
    d = cohort(30, seed=6)
    r = cross_validate(ZOO["linear"], d, CVConfig(normalize_mode="global"))
    for norm in r.normalizers:
        np.testing.assert_array_equal(norm.min, d.X.min(axis=0))


def test_shuffle_rows_with_fixed_folds():
    d = cohort(45, seed=8)
    folds = kfold_split(d.n, 5, 0)
    base = cross_validate(ZOO["linear"], d, folds=folds)
    perm = np.random.default_rng(1).permutation(d.n)
    inv = np.argsort(perm)
    shuffled = Dataset(d.X[perm], d.y[perm], d.feature_names)
    moved = [np.sort(inv[f]) for f in folds]
    other = cross_validate(ZOO["linear"], shuffled, folds=moved)
    assert other.rmse == pytest.approx(base.rmse, rel=1e-12)


def test_overlapping_folds_rejected():
    d = cohort(10, seed=0)
    with pytest.raises(BadFoldCount):
        cross_validate(ZOO["linear"], d, folds=[np.arange(6), np.arange(5, 10)])


def test_fold_error_names_fold():
    d = cohort(20, seed=0)
    bad = ModelSpec(Family.SVR, {"kernel": "gaussian", "C": 100.0, "max_iter": 1, "tol": 1e-12}, "bad")
    with pytest.raises(FoldError) as exc:
        cross_validate(bad, d)
    assert exc.value.fold == 0 and exc.value.model == "bad"


def test_clamp_nonneg():
    d = cohort(40, seed=1, intercept=-500)
    r = cross_validate(ZOO["linear"], d, CVConfig(clamp_nonneg=True))
    assert r.predictions.min() >= 0


def test_compare_and_layout():
    d = cohort(40, seed=3)
    table, reports = compare_models([ZOO["linear"], ZOO["stepwise"]], d, CVConfig(seed=7))
    assert table.names == ["linear", "stepwise"]
    text = table.render()
    assert text.splitlines()[0].split() == ["Linear", "Regression", "Models"]
    single = ComparisonTable.from_reports(reports[:1]).render()
    assert single.splitlines()[1].split() == ["Linear"]


def test_comparison_csv_roundtrip(tmp_path):
    d = cohort(30, seed=3)
    table, _ = compare_models([ZOO["robust"], ZOO["tree_fine"]], d)
    table.write_csv(tmp_path / "c.csv")
    with open(tmp_path / "c.csv") as fh:
        assert next(csv.reader(fh)) == ["model", "rmse", "mae_mean", "mae_max", "pred_speed"]
    back = ComparisonTable.read_csv(tmp_path / "c.csv")
    assert back.rmse == table.rmse and back.mae_max == table.mae_max


def test_ablation_direction_single():
    d = cohort(102, seed=0)
    t = ablate_age(d, CVConfig(seed=0), {"Linear": ABLATION_FAMILIES["Linear"]})
    assert t.with_age[0] < t.without_age[0]
    assert t.best_with[0] in ABLATION_FAMILIES["Linear"]


def test_plot_data(tmp_path):
    d = cohort(15, seed=2)
    r = cross_validate(ZOO["linear"], d)
    triples = prediction_plot_data(r)
    assert [t[0] for t in triples] == list(range(15))
    pooled = np.sqrt(np.mean([(p - a) ** 2 for _, p, a in triples]))
    assert pooled == pytest.approx(r.rmse, abs=1e-9)
    write_plot_csv(r, tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "case_index,predicted_days,actual_days" and len(lines) == 16


def test_plot_data_perfect_model(rng):
    y = rng.uniform(100, 900, 10)
    r = cross_validate(ZOO["linear"], Dataset(y[:, None], y, ("y",)))
    assert all(abs(p - a) < 1e-6 for _, p, a in prediction_plot_data(r))
