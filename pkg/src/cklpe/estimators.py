"""Value estimators, best-policy selection and regret."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bandit import Samples, draw_many, policy_value
from .clustering import ClusterAssignment, cluster_barycenters
from .errors import InvalidArgumentError, SupportViolationError
from .policy import as_policy, as_policy_set


@dataclass(frozen=True)
class Dataset:
    """Samples collected under each cluster's behavior policy."""

    per_cluster: Sequence[Samples]

    @property
    def counts(self):
        return np.array([s.actions.size for s in self.per_cluster], dtype=np.int64)

    @property
    def n(self):
        return int(self.counts.sum())


@dataclass(frozen=True)
class EstimateTable:
    values: np.ndarray
    cluster_of: np.ndarray


@dataclass(frozen=True)
class SelectionResult:
    selected_index: int
    selected_estimate: float
    regret: float = float("nan")


def mc_estimate(rewards):
    """Plain Monte Carlo mean of on-policy rewards."""
    r = np.asarray(rewards, dtype=float)
    if r.size == 0:
        raise InvalidArgumentError("mc_estimate needs at least one reward")
    return float(np.sum(r) / r.size)


def is_estimate(target, behavior, data):
    """Importance-sampling estimate ``(1/n) sum_t target(A_t)/behavior(A_t) * R_t``.

    No clipping or self-normalization is applied.
    """
    target = as_policy(target)
    behavior = as_policy(behavior)
    actions, rewards = data
    actions = np.asarray(actions, dtype=np.int64)
    rewards = np.asarray(rewards, dtype=float)
    if actions.size == 0:
        raise InvalidArgumentError("is_estimate needs at least one sample")
    if target.size != behavior.size:
        raise InvalidArgumentError("target and behavior have different action counts")
    b = behavior[actions]
    if np.any(b == 0.0):
        raise SupportViolationError("behavior policy is zero on an observed action")
    return float(np.sum(target[actions] / b * rewards) / actions.size)


def allocate_samples(n, m):
    """Split ``n`` samples over ``m`` clusters as evenly as possible.

    The first ``n mod m`` clusters receive one extra sample.
    """
    n, m = int(n), int(m)
    if m < 1 or n < m:
        raise InvalidArgumentError(f"need n >= M >= 1, got n={n}, M={m}")
    counts = np.full(m, n // m, dtype=np.int64)
    counts[: n % m] += 1
    return counts


def collect_dataset(model, design, counts, rng):
    """Draw ``counts[j]`` samples under each cluster barycenter from one stream."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size != design.n_clusters:
        raise InvalidArgumentError(f"got {counts.size} counts for {design.n_clusters} clusters")
    return Dataset(tuple(draw_many(model, design.barycenters, counts, rng)))


def clustered_estimates(policies, design, data):
    """Clustered IS estimate for every target policy.

    A policy in cluster ``j`` is re-weighted against that cluster's
    barycenter using only the cluster's own samples. Rewards are first
    summed per action (in sample order), which is algebraically identical
    to the per-sample sum of :func:`is_estimate` and costs ``O(N K)``
    instead of ``O(N n_j)``.
    """
    pset = as_policy_set(policies)
    labels = design.assignment.labels
    m, k = design.barycenters.shape
    if labels.size != pset.shape[0]:
        raise InvalidArgumentError("design and policy set disagree on N")
    if len(data.per_cluster) != m:
        raise InvalidArgumentError(f"dataset has {len(data.per_cluster)} clusters, design has {m}")
    counts = data.counts
    used = np.unique(labels)
    if np.any(counts[used] < 1):
        raise InvalidArgumentError("every non-empty cluster needs at least one sample")

    reward_sums = np.zeros((m, k))
    observed = np.zeros((m, k), dtype=bool)
    for j, (actions, rewards) in enumerate(data.per_cluster):
        if actions.size:
            reward_sums[j] = np.bincount(actions, weights=rewards, minlength=k)
            observed[j] = np.bincount(actions, minlength=k) > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = reward_sums / design.barycenters
    if np.any(design.barycenters[observed] == 0):
        raise SupportViolationError("a cluster barycenter is zero on an observed action")
    scaled[~observed] = 0.0
    values = np.einsum("ik,ik->i", pset, scaled[labels]) / np.maximum(counts[labels], 1)
    return EstimateTable(values, labels.copy())


def select_best(table):
    """Global argmax of the estimated values; ties go to the lowest index."""
    values = np.asarray(table.values if isinstance(table, EstimateTable) else table, dtype=float)
    if values.size == 0:
        raise InvalidArgumentError("cannot select from an empty table")
    i = int(np.argmax(values))
    return SelectionResult(i, float(values[i]))


def true_values(model, policies):
    pset = as_policy_set(policies)
    if pset.shape[1] != model.k:
        raise InvalidArgumentError(f"policies have {pset.shape[1]} actions but the model has {model.k} arms")
    return pset @ model.means


def regret(model, policies, selected):
    """Value shortfall ``max_i v(pi_i) - v(pi_selected)`` of a selection."""
    v = true_values(model, policies)
    if not 0 <= selected < v.size:
        raise InvalidArgumentError(f"selected index {selected} out of range for {v.size} policies")
    return float(max(v.max() - v[selected], 0.0))


def kl_pe(model, policies, n, rng):
    """Best-policy selection with the single barycenter as behavior policy.

    Returns the :class:`SelectionResult` with its regret filled in.
    """
    pset = as_policy_set(policies)
    design = cluster_barycenters(pset, ClusterAssignment(np.zeros(pset.shape[0]), 1))
    data = collect_dataset(model, design, [n], rng)
    sel = select_best(clustered_estimates(pset, design, data))
    return SelectionResult(sel.selected_index, sel.selected_estimate, regret(model, pset, sel.selected_index))


__all__ = [
    "Dataset",
    "EstimateTable",
    "SelectionResult",
    "allocate_samples",
    "clustered_estimates",
    "collect_dataset",
    "is_estimate",
    "kl_pe",
    "mc_estimate",
    "policy_value",
    "regret",
    "select_best",
    "true_values",
]
