import numpy as np
import pytest

from tumoreval.models import fit_bagged, fit_boosted, fit_tree


def test_zero_stages_predicts_mean(rng):
    X, y = rng.random((20, 2)), rng.random(20)
    m = fit_boosted(X, y, n_stages=0)
    assert m.predict(rng.random((5, 2))) == pytest.approx([y.mean()] * 5)


@pytest.mark.parametrize("nu", [0.1, 1.0, 1.9])
def test_training_sse_non_increasing(rng, nu):
    X, y = rng.random((60, 4)), rng.normal(size=60)
    sse = np.array(fit_boosted(X, y, n_stages=30, learn_rate=nu).train_sse)
    assert np.all(np.diff(sse) <= 1e-9 * sse[0])


def test_full_rate_converges():
    X = np.arange(10.0)[:, None]
    y = np.random.default_rng(1).normal(size=10)
    m = fit_boosted(X, y, n_stages=200, learn_rate=1.0, min_leaf=1)
    assert m.train_sse[-1] < 1e-10


def test_boosted_sse_matches_predictions(rng):
    X, y = rng.random((40, 3)), rng.random(40)
    m = fit_boosted(X, y)
    assert m.train_sse[-1] == pytest.approx(float(((y - m.predict(X)) ** 2).sum()), rel=1e-12)


def test_bagged_single_tree_no_bootstrap(rng):
    X, y = rng.random((40, 3)), rng.random(40)
    np.testing.assert_array_equal(
        fit_bagged(X, y, n_trees=1, bootstrap=False).predict(X), fit_tree(X, y, min_leaf=8).predict(X)
    )


def test_bagged_is_mean_of_members(rng):
    X, y = rng.random((50, 4)), rng.random(50)
    m = fit_bagged(X, y, seed=4)
    Xs = rng.random((30, 4))
    members = np.stack([t.predict(Xs) for t in m.trees])
    assert len(m.trees) == 30
    np.testing.assert_array_equal(m.predict(Xs), members.mean(axis=0))


def test_bagged_seed_determinism(rng):
    X, y = rng.random((50, 4)), rng.random(50)
    a = fit_bagged(X, y, seed=11).predict(X)
    np.testing.assert_array_equal(a, fit_bagged(X, y, seed=11).predict(X))
    assert not np.array_equal(a, fit_bagged(X, y, seed=12).predict(X))
