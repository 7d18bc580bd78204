import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from graphaudit.cluster import kmeans


def test_two_obvious_groups():
    r = kmeans([0.0, 0.1, 10.0, 10.1], 2, seed=0)
    assert r.labels[0] == r.labels[1] != r.labels[2] == r.labels[3]
    np.testing.assert_allclose(sorted(r.centroids.ravel()), [0.05, 10.05])


def test_single_cluster_is_the_mean():
    pts = np.random.default_rng(0).normal(size=(30, 3))
    r = kmeans(pts, 1, seed=0)
    np.testing.assert_allclose(r.centroids[0], pts.mean(axis=0))
    assert r.inertia == pytest.approx(((pts - pts.mean(axis=0)) ** 2).sum())


def test_planted_gaussians_are_recovered():
    rng = np.random.default_rng(1)
    truth = np.repeat([0, 1, 2], 100)
    centers = np.array([[0, 0], [8, 0], [0, 8]])
    pts = centers[truth] + rng.normal(size=(300, 2))
    r = kmeans(pts, 3, seed=2)
    # best label matching via the contingency table
    agree = max(np.mean(p[r.labels] == truth) for p in map(np.array, [[0, 1, 2], [0, 2, 1], [1, 0, 2],
                                                                          [1, 2, 0], [2, 0, 1], [2, 1, 0]]))
    assert agree >= 0.99


@given(arrays(np.float64, st.tuples(st.integers(4, 40), st.integers(1, 3)), elements=st.floats(-100, 100)),
       st.integers(1, 4), st.integers(0, 100))
def test_inertia_never_increases(pts, k, seed):
    if len(np.unique(pts, axis=0)) < k:
        with pytest.raises(ValueError):
            kmeans(pts, k, seed)
        return
    r = kmeans(pts, k, seed)
    h = np.array(r.inertia_history)
    assert np.all(np.diff(h) <= 1e-9 * (1 + h[:-1]))


def test_determinism_and_errors():
    pts = np.random.default_rng(3).normal(size=(20, 2))
    assert np.array_equal(kmeans(pts, 3, 5).labels, kmeans(pts, 3, 5).labels)
    with pytest.raises(ValueError):
        kmeans(pts, 0, 0)
    with pytest.raises(ValueError):
        kmeans(pts, 21, 0)
    with pytest.raises(ValueError):
        kmeans(np.ones((5, 2)), 2, 0)


def test_planted_one_dimensional_gaussians():
    rng = np.random.default_rng(4)
    truth = np.repeat([0, 1], 100)
    pts = np.where(truth == 0, 0.0, 5.0) + rng.normal(0, 0.5, size=200)
    r = kmeans(pts, 2, seed=0)
    agree = np.mean(r.labels == truth)
    assert max(agree, 1 - agree) >= 0.99
