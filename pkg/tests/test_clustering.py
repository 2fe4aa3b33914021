import numpy as np
import pytest
from hypothesis import given, settings

from cklpe.bandit import RngState
from cklpe.clustering import (
    ClusterAssignment,
    ClusteredDesign,
    cluster_barycenters,
    hellinger_kmeans,
    improvement_holds,
    kmeans,
    sqrt_embed,
)
from cklpe.clustering import _assign, _sq_dists
from cklpe.errors import InvalidArgumentError, StrictPositivityError
from cklpe.policy import hellinger_sq, kl_barycenter, max_importance_weight, uniform_policy

from conftest import policy_sets, random_policy_set


def test_sqrt_embed_uniform_and_unit_norm():
    np.testing.assert_array_equal(sqrt_embed(uniform_policy(4)), [[0.5] * 4])
    pts = sqrt_embed(random_policy_set(np.random.default_rng(0), 30, 6))
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(policy_sets(max_n=2))
def test_embedding_isometry(pair):
    p, q = pair[0], pair[-1]
    pts = sqrt_embed(np.stack([p, q]))
    assert np.sum((pts[0] - pts[1]) ** 2) == pytest.approx(2 * hellinger_sq(p, q), abs=1e-12)


def test_kmeans_degenerate_counts():
    x = np.random.default_rng(1).random((12, 3))
    assert np.all(kmeans(x, 1).labels == 0)
    full = kmeans(x, 12)
    assert sorted(full.labels) == list(range(12))
    with pytest.raises(InvalidArgumentError):
        kmeans(x, 13)
    with pytest.raises(InvalidArgumentError):
        kmeans(x, 0)


def test_kmeans_recovers_planted_groups():
    gen = np.random.default_rng(3)
    a = gen.normal(0, 0.001, size=(15, 4))
    b = gen.normal(0, 0.001, size=(10, 4)) + 2.0
    x = np.vstack([a, b])
    planted = np.r_[np.zeros(15), np.ones(10)]
    for seed in range(10):
        labels = kmeans(x, 2, rng=RngState(seed)).labels
        same = np.array_equal(labels, planted) or np.array_equal(labels, 1 - planted)
        assert same


def test_kmeans_is_deterministic_and_cost_monotone():
    x = np.random.default_rng(5).random((200, 5))
    a1 = kmeans(x, 7, rng=RngState(9, 4))
    a2 = kmeans(x, 7, rng=RngState(9, 4))
    np.testing.assert_array_equal(a1.labels, a2.labels)
    hist = np.array(a1.cost_history)
    assert np.all(np.diff(hist) <= 1e-12)


def test_kmeans_duplicate_points_keep_clusters_non_empty():
    x = np.vstack([np.zeros((8, 2)), np.ones((2, 2))])
    for seed in range(20):
        a = kmeans(x, 5, rng=RngState(seed))
        assert np.all(a.sizes >= 1)


def test_converged_labels_are_lowest_nearest_centroid():
    # at convergence every label is the first nearest centroid
    x = np.array([[i, j] for i in range(5) for j in range(5)], dtype=float)
    for seed in range(30):
        a = kmeans(x, 4, rng=RngState(seed))
        centers = np.stack([x[a.labels == j].mean(axis=0) for j in range(4)])
        d = ((x[:, None, :] - centers[None]) ** 2).sum(axis=2)
        nearest = d == d.min(axis=1, keepdims=True)
        np.testing.assert_array_equal(a.labels, np.argmax(nearest, axis=1))


def test_assignment_ties_go_to_lowest_index():
    x = np.array([[1.0], [0.0], [3.0]])
    centers = np.array([[2.0], [0.0], [2.0]])
    d = _sq_dists(x, centers)
    assert d[0, 0] == d[0, 1] == d[0, 2] == 1.0
    np.testing.assert_array_equal(_assign(d), [0, 1, 0])


def test_cluster_assignment_validation():
    with pytest.raises(InvalidArgumentError):
        ClusterAssignment(np.array([0, 0, 2]), 3)
    with pytest.raises(InvalidArgumentError):
        ClusterAssignment(np.array([0]), 2)
    a = ClusterAssignment(np.array([1, 0, 1]), 2)
    np.testing.assert_array_equal(a.sizes, [1, 2])
    np.testing.assert_array_equal(a.members(1), [0, 2])


def test_cluster_barycenters_single_and_singletons():
    pset = random_policy_set(np.random.default_rng(2), 9, 4)
    one = cluster_barycenters(pset, ClusterAssignment(np.zeros(9), 1))
    np.testing.assert_array_equal(one.barycenters[0], kl_barycenter(pset))
    assert one.sigma_c == max_importance_weight(pset, kl_barycenter(pset))
    each = cluster_barycenters(pset, ClusterAssignment(np.arange(9), 9))
    np.testing.assert_array_equal(each.sigma_per_cluster, np.ones(9))
    assert each.sigma_c == 1 and each.m_sigma_c_sq == 9


def test_cluster_barycenters_lower_bound_split(lb4):
    design = cluster_barycenters(lb4.policies, ClusterAssignment(np.array([0, 1, 1, 1]), 2))
    assert design.sigma_c == 1
    assert lb4.sigma_kl == 2
    assert improvement_holds(design, lb4.sigma_kl)


def test_cluster_barycenters_rejects_zero_entries():
    with pytest.raises(StrictPositivityError):
        cluster_barycenters([[1.0, 0.0], [0.5, 0.5]], ClusterAssignment(np.zeros(2), 1))


@settings(max_examples=40, deadline=None)
@given(policy_sets(max_n=20))
def test_per_cluster_weight_bound(pset):
    m = max(1, pset.shape[0] // 3)
    a = hellinger_kmeans(pset, m, rng=RngState(1))
    d = cluster_barycenters(pset, a)
    assert np.all(d.sigma_per_cluster >= 1)
    assert np.all(d.sigma_per_cluster <= a.sizes + 1e-12)
    assert d.sigma_c == d.sigma_per_cluster.max()
    for j in range(m):
        np.testing.assert_allclose(d.barycenters[j], pset[a.labels == j].mean(axis=0), atol=1e-15)


def test_improvement_holds_examples():
    d1 = ClusteredDesign(ClusterAssignment(np.zeros(3), 1), np.full((1, 2), 0.5), np.array([2.0]))
    assert not improvement_holds(d1, 2.0)
    d2 = ClusteredDesign(ClusterAssignment(np.array([0, 1, 1]), 2), np.full((2, 2), 0.5), np.array([1.0, 1.0]))
    assert improvement_holds(d2, 2.0)
    with pytest.raises(InvalidArgumentError):
        improvement_holds(d2, 0.5)
