"""Closed-form sample-complexity and importance-weight bounds.

Sample sizes are returned as integer ceilings with a floor of one sample.
Bounds that only hold for ``epsilon <= gap`` raise
:class:`~cklpe.errors.PreconditionError` when asked outside that range.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bandit import BanditModel
from .errors import InvalidArgumentError, PreconditionError
from .policy import as_policy_set, kl_barycenter, max_importance_weight, softmax_from_weights


@dataclass(frozen=True)
class BoundInputs:
    """Parameters shared by the bound formulas.

    Each formula reads only the fields it needs and validates those.

    Attributes
    ----------
    epsilon : target accuracy
    delta : failure probability
    r_star : subgaussian constant of the rewards
    sigma : maximal importance weight (sigma_KL or sigma_c)
    n_targets : number of target policies N
    n_clusters : number of clusters M
    n1 : size of the cluster holding the best policy
    eta : bound on KL(pi_i || barycenter)
    lam : mixing weight of the safe behavior policy
    gap : value gap between the best cluster and all others
    k_arms : number of actions K
    """

    epsilon: Optional[float] = None
    delta: Optional[float] = None
    r_star: float = 1.0
    sigma: float = 1.0
    n_targets: int = 1
    n_clusters: int = 1
    n1: int = 1
    eta: float = 0.0
    lam: Optional[float] = None
    gap: Optional[float] = None
    k_arms: int = 1


def _check_eps_delta(b):
    if b.epsilon is None or not b.epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be positive, got {b.epsilon}")
    if b.delta is None or not 0 < b.delta < 1:
        raise InvalidArgumentError(f"delta must lie in (0, 1), got {b.delta}")
    if b.r_star < 0:
        raise InvalidArgumentError(f"r_star must be non-negative, got {b.r_star}")
    if b.sigma < 1:
        raise InvalidArgumentError(f"sigma must be >= 1, got {b.sigma}")
    if b.n_targets < 1:
        raise InvalidArgumentError(f"n_targets must be positive, got {b.n_targets}")


def _check_clustered(b):
    _check_eps_delta(b)
    if b.n_clusters < 1 or b.n_clusters > b.n_targets:
        raise InvalidArgumentError(f"need 1 <= n_clusters <= n_targets, got {b.n_clusters}")
    if not 1 <= b.n1 <= b.n_targets:
        raise InvalidArgumentError(f"need 1 <= n1 <= n_targets, got {b.n1}")
    if b.gap is None or not b.gap > 0:
        raise InvalidArgumentError(f"gap must be given and positive, got {b.gap}")
    if b.epsilon > b.gap:
        raise PreconditionError(f"the bound requires epsilon <= gap, got {b.epsilon} > {b.gap}")


def _ceil_samples(x):
    return max(1, math.ceil(x))


def sample_size_klpe(b):
    """Samples under the barycenter that make regret < epsilon with probability 1 - delta.

    ``ceil(2 R*^2 sigma^2 log(N / delta) / epsilon^2)``
    """
    _check_eps_delta(b)
    return _ceil_samples(2 * b.r_star**2 * b.sigma**2 * math.log(b.n_targets / b.delta) / b.epsilon**2)


def sample_size_cluster_gate(b):
    """Total samples after which the selection leaves the best cluster w.p. at most delta.

    Assumes equal allocation over ``M >= 2`` clusters.
    """
    _check_clustered(b)
    m = b.n_clusters
    if m < 2:
        raise InvalidArgumentError("the cluster gate needs at least two clusters")
    log_arg = ((m - 2) * (b.n1 + 1) + b.n_targets + m) / b.delta
    return _ceil_samples(2 * m * b.r_star**2 * b.sigma**2 * math.log(log_arg) / b.epsilon**2)


def sample_size_ckl(b):
    """Total clustered samples that make regret < epsilon with probability 1 - delta."""
    _check_clustered(b)
    m = b.n_clusters
    log_arg = (2 + b.n_targets + m + (m - 1) * (b.n1 + 1)) / b.delta
    return _ceil_samples(2 * m * b.r_star**2 * b.sigma**2 * math.log(log_arg) / b.epsilon**2)


def sigma_bound_from_eta(b, min_bary):
    """Upper bound on the maximal barycenter weight when all KL(pi_i || bary) <= eta."""
    if not min_bary > 0:
        raise InvalidArgumentError(f"min_bary must be positive, got {min_bary}")
    if b.eta < 0:
        raise InvalidArgumentError(f"eta must be non-negative, got {b.eta}")
    eta = b.eta
    return min(b.n_targets, 1 + 2 * eta / min_bary + 2 * math.sqrt(2 * eta) / math.sqrt(min_bary))


def sigma_safe_bound(b):
    """Upper bound on the weights against the safe mixture ``(1-lam) bary + lam uniform``."""
    lam, eta, k = b.lam, b.eta, b.k_arms
    if lam is None or not 0 < lam < 1:
        raise InvalidArgumentError(f"lam must lie in (0, 1), got {lam}")
    if eta < 0 or k < 1:
        raise InvalidArgumentError(f"need eta >= 0 and k_arms >= 1, got eta={eta}, k_arms={k}")
    cap = b.n_targets / (1 - lam)
    shape = 1 / (1 - lam) + 2 * eta * k / lam + 2 * math.sqrt(2 * eta * k) / (math.sqrt(1 - lam) * math.sqrt(lam))
    return min(cap, shape)


def sigma_safe_bound_sqrt_eta(b):
    """:func:`sigma_safe_bound` with the mixing weight tied to ``lam = sqrt(eta)``, for ``0 < eta < 1``."""
    eta, k = b.eta, b.k_arms
    if not 0 < eta < 1:
        raise InvalidArgumentError(f"eta must lie in (0, 1), got {eta}")
    if k < 1:
        raise InvalidArgumentError(f"k_arms must be positive, got {k}")
    r = math.sqrt(eta)
    cap = b.n_targets / (1 - r)
    shape = 1 / (1 - r) + 2 * r * k + 2 * math.sqrt(2 * k * r) / math.sqrt(1 - r)
    return min(cap, shape)


def expected_regret_bound(b, delta_max, n):
    """Problem-independent bound on the expected regret with ``n`` total samples."""
    m, big_n, n1 = b.n_clusters, b.n_targets, b.n1
    if not delta_max > 0:
        raise InvalidArgumentError(f"delta_max must be positive, got {delta_max}")
    if n < m or m < 1 or big_n < 1 or not 1 <= n1 <= big_n or b.r_star < 0 or b.sigma < 1:
        raise InvalidArgumentError("expected_regret_bound inputs out of range")
    gap_term = delta_max / math.sqrt(n) * (1 + m * n1 / big_n + 2 * m / big_n)
    noise_term = math.sqrt(2) * m**1.5 * b.r_star * b.sigma * math.sqrt(math.log(big_n * math.sqrt(n)) / n)
    return gap_term + noise_term


@dataclass(frozen=True)
class LowerBoundInstance:
    """Two-armed deterministic bandit on which a single barycenter is provably slow."""

    model: BanditModel
    policies: np.ndarray
    sigma_n: float
    gap: float
    lambda_r: float

    @property
    def barycenter(self):
        return kl_barycenter(self.policies)

    @property
    def sigma_kl(self):
        return max_importance_weight(self.policies, self.barycenter)


def lower_bound_model(n_policies, r1=1.0):
    """Hard instance with ``N`` targets: one favors arm 0, the rest favor arm 1.

    Rewards are ``r1`` and ``(1 - lambda_r) r1`` with
    ``lambda_r = 1/N - 1/(N(N-1))``; the measured maximal weight is ``N/2``.
    """
    big_n = int(n_policies)
    if big_n < 3:
        raise InvalidArgumentError(f"the lower-bound construction needs N >= 3, got {n_policies}")
    if not r1 > 0:
        raise InvalidArgumentError(f"r1 must be positive, got {r1}")
    lam = 1 / big_n - 1 / (big_n * (big_n - 1))
    model = BanditModel.deterministic([r1, (1 - lam) * r1])
    policies = np.empty((big_n, 2))
    policies[0] = (1 - 1 / big_n, 1 / big_n)
    policies[1:] = (1 / big_n, 1 - 1 / big_n)
    gap = lam * (1 - 2 / big_n) * r1
    return LowerBoundInstance(model, policies, big_n / 2, gap, lam)


def lower_bound_prob(n, sigma_n):
    """Lower bound ``exp(-n / (2 sigma_N^2)) / sqrt(2n)`` on the misselection probability."""
    if n < 1:
        raise InvalidArgumentError(f"n must be positive, got {n}")
    if not sigma_n > 0:
        raise InvalidArgumentError(f"sigma_n must be positive, got {sigma_n}")
    # divide twice so huge sigma_n cannot overflow
    return math.exp(-n / sigma_n / sigma_n / 2) / math.sqrt(2 * n)


def uniform_limit_deviation(n_policies, k_arms, tau, rng):
    """Sup-norm distance of a random softmax barycenter from uniform.

    Draws ``N`` policies from iid Uniform(0, 1) weights at temperature
    ``tau`` and returns ``max_a |bary(a) - 1/K|``.
    """
    n, k = int(n_policies), int(k_arms)
    if n < 1 or k < 1:
        raise InvalidArgumentError(f"need N, K >= 1, got N={n_policies}, K={k_arms}")
    weights = rng.generator().random((n, k))
    bary = softmax_from_weights(weights, tau).mean(axis=0)
    return float(np.max(np.abs(bary - 1 / k)))


def measured_eta(policies):
    """Largest KL divergence of a target from the barycenter (the tightest eta)."""
    pset = as_policy_set(policies)
    bary = kl_barycenter(pset)
    return float(np.max(np.sum(pset * np.log(pset / bary), axis=1)))


__all__ = [
    "BoundInputs",
    "LowerBoundInstance",
    "expected_regret_bound",
    "lower_bound_model",
    "lower_bound_prob",
    "measured_eta",
    "sample_size_ckl",
    "sample_size_cluster_gate",
    "sample_size_klpe",
    "sigma_bound_from_eta",
    "sigma_safe_bound",
    "sigma_safe_bound_sqrt_eta",
    "uniform_limit_deviation",
]
