"""Hellinger k-means over target policies and per-cluster barycenter design.

Policies are embedded by taking element-wise square roots. The embedded
points lie on the unit sphere and their squared Euclidean distance is twice
the squared Hellinger distance, so ordinary k-means in the embedding
clusters policies by Hellinger distance.
"""

from dataclasses import dataclass, field

import numpy as np

from .bandit import RngState
from .errors import InvalidArgumentError
from .policy import as_policy_set, kl_barycenter, max_importance_weight


@dataclass(frozen=True)
class ClusterAssignment:
    """Cluster label per target policy.

    ``cost_history`` records the k-means cost (sum of squared distances to
    the assigned centroid) after every Lloyd update.
    """

    labels: np.ndarray
    n_clusters: int
    cost_history: tuple = ()

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        m = int(self.n_clusters)
        if m < 1 or labels.ndim != 1 or labels.size < m:
            raise InvalidArgumentError(f"need 1 <= M <= N, got M={m}, N={labels.size}")
        if labels.min() < 0 or labels.max() >= m:
            raise InvalidArgumentError(f"labels must lie in [0, {m})")
        if np.unique(labels).size != m:
            raise InvalidArgumentError("every cluster must be non-empty")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "n_clusters", m)

    @property
    def sizes(self):
        return np.bincount(self.labels, minlength=self.n_clusters)

    def members(self, j):
        return np.flatnonzero(self.labels == j)


@dataclass(frozen=True)
class ClusteredDesign:
    """Per-cluster barycenter behavior policies and their maximal weights."""

    assignment: ClusterAssignment
    barycenters: np.ndarray
    sigma_per_cluster: np.ndarray
    sigma_c: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma_c", float(np.max(self.sigma_per_cluster)))

    @property
    def n_clusters(self):
        return self.assignment.n_clusters

    @property
    def m_sigma_c_sq(self):
        return self.n_clusters * self.sigma_c**2


def sqrt_embed(policies):
    """Element-wise square root of every policy, shape ``(N, K)``."""
    return np.sqrt(as_policy_set(policies))


def _sq_dists(points, centers):
    # ||x - c||^2 expanded; clamp tiny negatives from cancellation
    d = (
        np.einsum("ij,ij->i", points, points)[:, None]
        - 2.0 * points @ centers.T
        + np.einsum("ij,ij->i", centers, centers)[None, :]
    )
    return np.maximum(d, 0.0)


def _kmeanspp(points, m, gen):
    n = points.shape[0]
    chosen = [int(gen.integers(n))]
    closest = _sq_dists(points, points[chosen])[:, 0]
    for _ in range(1, m):
        total = closest.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(closest), gen.random() * total, side="right"))
            idx = min(idx, n - 1)
            # never re-pick a point already at distance zero
            if closest[idx] == 0:
                idx = int(np.flatnonzero(closest > 0)[0])
        else:
            # all remaining points coincide with chosen centers
            free = np.setdiff1d(np.arange(n), chosen)
            idx = int(free[gen.integers(free.size)])
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(points, points[[idx]])[:, 0])
    return points[chosen].copy()


def _assign(dists):
    # np.argmin returns the first minimum, so ties go to the lowest cluster index
    return np.argmin(dists, axis=1)


def _repair_empty(labels, dists, m):
    """Move the point farthest from its centroid into each empty cluster."""
    counts = np.bincount(labels, minlength=m)
    for j in np.flatnonzero(counts == 0):
        own = dists[np.arange(labels.size), labels]
        own = np.where(counts[labels] > 1, own, -np.inf)
        i = int(np.argmax(own))
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] += 1
    return labels


def kmeans(points, n_clusters, max_iter=100, rng=None):
    """Lloyd's algorithm with k-means++ seeding on squared Euclidean cost.

    Iteration stops once labels no longer change or after ``max_iter``
    updates. Ties between equidistant centroids go to the lowest index.
    A cluster that empties is refilled with the point farthest from its own
    centroid (taken from a cluster with more than one member), so every
    returned cluster is non-empty. With ``n_clusters == N`` each point is
    its own cluster and no random numbers are consumed.

    Parameters
    ----------
    points : array_like, shape (N, d)
    n_clusters : int
    max_iter : int
    rng : RngState
        Drives the seeding; defaults to ``RngState(0)``.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidArgumentError(f"points must be a non-empty (N, d) array, got shape {x.shape}")
    n = x.shape[0]
    m = int(n_clusters)
    if not 1 <= m <= n:
        raise InvalidArgumentError(f"need 1 <= M <= N, got M={m}, N={n}")
    if int(max_iter) < 1:
        raise InvalidArgumentError(f"max_iter must be positive, got {max_iter}")
    if m == n:
        return ClusterAssignment(np.arange(n), m, (0.0,))
    if m == 1:
        centroid = x.mean(axis=0, keepdims=True)
        return ClusterAssignment(np.zeros(n, dtype=np.int64), 1, (float(_sq_dists(x, centroid).sum()),))

    gen = (rng if rng is not None else RngState(0)).generator()
    centers = _kmeanspp(x, m, gen)
    labels = None
    history = []
    for _ in range(int(max_iter)):
        dists = _sq_dists(x, centers)
        new = _repair_empty(_assign(dists), dists, m)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = np.stack([x[labels == j].mean(axis=0) for j in range(m)])
        history.append(float(_sq_dists(x, centers)[np.arange(n), labels].sum()))
    return ClusterAssignment(labels, m, tuple(history))


def hellinger_kmeans(policies, n_clusters, max_iter=100, rng=None):
    """Cluster policies by running :func:`kmeans` on their square-root embedding."""
    return kmeans(sqrt_embed(policies), n_clusters, max_iter=max_iter, rng=rng)


def cluster_barycenters(policies, assignment):
    """Barycenter behavior policy and maximal weight for every cluster.

    Each behavior policy is the arithmetic mean of the member policies in
    the original (not embedded) coordinates.
    """
    pset = as_policy_set(policies)
    if assignment.labels.size != pset.shape[0]:
        raise InvalidArgumentError(
            f"assignment covers {assignment.labels.size} policies, set has {pset.shape[0]}"
        )
    m = assignment.n_clusters
    barys = np.empty((m, pset.shape[1]))
    sigmas = np.empty(m)
    for j in range(m):
        members = pset[assignment.labels == j]
        barys[j] = kl_barycenter(members)
        sigmas[j] = max_importance_weight(members, barys[j])
    return ClusteredDesign(assignment, barys, sigmas)


def improvement_holds(design, sigma_kl):
    """Whether clustering improves the leading sample-complexity term: ``M sigma_c^2 < sigma_KL^2``."""
    if sigma_kl < 1:
        raise InvalidArgumentError(f"sigma_kl must be >= 1, got {sigma_kl}")
    return bool(design.m_sigma_c_sq < sigma_kl**2)
