import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tumoreval.edt import distance_transform, squared_distance_transform
from tumoreval.errors import EmptyMask

from oracles import brute_edt


def test_axis_aligned_distance():
    m = np.zeros((5, 1, 1), bool)
    m[0, 0, 0] = True
    assert distance_transform(m)[3, 0, 0] == 3.0


def test_anisotropic_diagonal():
    m = np.zeros((2, 2, 2), bool)
    m[0, 0, 0] = True
    assert distance_transform(m, (1, 2, 3))[1, 1, 1] == pytest.approx(math.sqrt(14), abs=1e-12)


def test_zero_on_foreground(rng):
    m = rng.random((9, 8, 7)) < 0.2
    d = distance_transform(m, (0.7, 1.3, 2.1))
    assert np.all(d[m] == 0)
    assert np.all(d[~m] > 0)


def test_empty_mask_raises():
    with pytest.raises(EmptyMask):
        distance_transform(np.zeros((3, 3, 3), bool))


def test_full_mask_is_zero():
    assert not distance_transform(np.ones((4, 3, 2), bool)).any()


def test_squared_matches_square_of_distance(rng):
    m = rng.random((6, 6, 6)) < 0.1
    m[0, 0, 0] = True
    sp = (1.1, 0.4, 2.0)
    np.testing.assert_allclose(np.sqrt(squared_distance_transform(m, sp)), distance_transform(m, sp), rtol=0, atol=0)


@pytest.mark.parametrize("seed", range(6))
def test_random_16_cubed_vs_brute_force(seed):
    r = np.random.default_rng(seed)
    m = r.random((16, 16, 16)) < r.uniform(0.002, 0.2)
    m[tuple(r.integers(0, 16, 3))] = True
    sp = tuple(r.uniform(0.3, 3.0, 3))
    np.testing.assert_allclose(distance_transform(m, sp), brute_edt(m, sp), rtol=0, atol=1e-6)


def test_single_voxel_in_thin_volume():
    m = np.zeros((1, 1, 40), bool)
    m[0, 0, 17] = True
    d = distance_transform(m, (1, 1, 0.5))
    np.testing.assert_allclose(d.ravel(), 0.5 * np.abs(np.arange(40) - 17))


@settings(max_examples=40, deadline=None)
@given(
    hnp.arrays(bool, hnp.array_shapes(min_dims=3, max_dims=3, min_side=1, max_side=7)),
    st.tuples(*[st.floats(0.1, 5.0)] * 3),
)
def test_property_matches_oracle(mask, spacing):
    if not mask.any():
        mask = mask.copy()
        mask.flat[0] = True
    np.testing.assert_allclose(distance_transform(mask, spacing), brute_edt(mask, spacing), atol=1e-9)
