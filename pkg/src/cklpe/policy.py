"""Arithmetic on the probability simplex.

A policy over ``K`` actions is a 1-D float array of non-negative entries
summing to one; a policy set is a 2-D ``(N, K)`` array whose rows are
policies. The constructors :func:`as_policy` and :func:`as_policy_set`
validate and return fresh ``float64`` copies; every other function in this
module accepts anything they accept.

All logarithms are natural and ``0 * log 0`` is taken as ``0``.
"""

import math

import numpy as np

from .errors import (
    DivergenceInfiniteError,
    InvalidArgumentError,
    StrictPositivityError,
)

#: Maximum tolerated deviation of a policy's sum from one.
SIMPLEX_TOL = 1e-9


def _normalize_rows(arr):
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("policy entries must be finite")
    if np.any(arr < 0):
        raise InvalidArgumentError("policy entries must be non-negative")
    sums = arr.sum(axis=-1, keepdims=True)
    if np.any(np.abs(sums - 1.0) > SIMPLEX_TOL):
        raise InvalidArgumentError(
            f"policy entries must sum to 1 within {SIMPLEX_TOL:g}, "
            f"got sums in [{sums.min():.12g}, {sums.max():.12g}]"
        )
    # sums within summation round-off are left alone; dividing would only move last bits
    if np.any(np.abs(sums - 1.0) > 4 * arr.shape[-1] * np.finfo(float).eps):
        arr = arr / sums
    return arr


def _to_array(values):
    try:
        return np.array(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"cannot read policy entries: {exc}") from None


def as_policy(probs):
    """Validate ``probs`` as a point on the simplex and return it as an array.

    Inputs whose sum is within ``SIMPLEX_TOL`` of one are renormalized;
    larger deviations, negative or non-finite entries raise
    :class:`InvalidArgumentError`.
    """
    arr = _to_array(probs)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidArgumentError(f"a policy must be a non-empty 1-D sequence, got shape {arr.shape}")
    return _normalize_rows(arr)


def as_policy_set(policies):
    """Validate a collection of policies sharing one action count.

    A single 1-D policy is accepted and promoted to a set of size one.
    """
    arr = _to_array(policies)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidArgumentError(
            f"a policy set must be a non-empty (N, K) array, got shape {arr.shape}"
        )
    return _normalize_rows(arr)


def uniform_policy(k):
    """Uniform policy over ``k`` actions."""
    if int(k) < 1:
        raise InvalidArgumentError(f"k must be positive, got {k}")
    return np.full(int(k), 1.0 / int(k))


def _require_positive(arr, what):
    if np.any(arr == 0.0):
        raise StrictPositivityError(f"{what} must be strictly positive")


def _same_k(p, q):
    if p.shape[-1] != q.shape[-1]:
        raise InvalidArgumentError(f"dimension mismatch: {p.shape[-1]} vs {q.shape[-1]} actions")


def softmax_from_weights(weights, temperature=1.0):
    """Softmax policy ``exp(tau * w_a) / sum_l exp(tau * w_l)``.

    Accepts a 1-D weight vector or a 2-D array of weight rows (one policy per
    row). The maximum is subtracted before exponentiating, so large
    ``tau * w`` do not overflow.
    """
    w = np.asarray(weights, dtype=float)
    if not np.isfinite(temperature) or temperature <= 0:
        raise InvalidArgumentError(f"temperature must be positive and finite, got {temperature}")
    if w.ndim not in (1, 2) or w.shape[-1] == 0:
        raise InvalidArgumentError(f"weights must be a non-empty 1-D or 2-D array, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise InvalidArgumentError("weights must be finite")
    z = temperature * w
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def kl_divergence(p, q):
    """KL divergence ``sum_a p(a) log(p(a) / q(a))``.

    Raises
    ------
    DivergenceInfiniteError
        If ``q(a) == 0`` for some action with ``p(a) > 0``.
    """
    p = as_policy(p)
    q = as_policy(q)
    _same_k(p, q)
    support = p > 0
    if np.any(q[support] == 0.0):
        raise DivergenceInfiniteError("q vanishes on the support of p")
    ps = p[support]
    return float(np.sum(ps * np.log(ps / q[support])))


def hellinger_sq(p, q):
    """Squared Hellinger distance ``(1/2) sum_a (sqrt p(a) - sqrt q(a))^2``."""
    p = as_policy(p)
    q = as_policy(q)
    _same_k(p, q)
    return float(0.5 * np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))


def entropy(p):
    """Shannon entropy in nats."""
    p = as_policy(p)
    ps = p[p > 0]
    return float(-np.sum(ps * np.log(ps)))


def kl_barycenter(policies):
    """KL-barycenter of a policy set: the component-wise arithmetic mean.

    The mean minimizes the average right KL divergence
    ``(1/N) sum_i KL(pi_i || b)`` over strictly positive ``b``; see
    :func:`average_right_kl`.
    """
    pset = as_policy_set(policies)
    _require_positive(pset, "every target policy")
    return column_mean(pset)


def column_mean(rows):
    """Correctly rounded column means of a 2-D array.

    ``math.fsum`` avoids the last-bit drift of pairwise summation, so
    ratios such as ``pi_i(a) / bary(a)`` come out exact when the true
    value is representable.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.shape[0] == 1:
        return rows[0].copy()
    return np.array([math.fsum(col) for col in rows.T.tolist()]) / rows.shape[0]


def average_right_kl(policies, behavior):
    """Average ``(1/N) sum_i KL(pi_i || behavior)`` over a policy set.

    Equals ``H(mean) - mean_i H(pi_i) + KL(mean || behavior)``, so it is
    minimized by the barycenter.
    """
    pset = as_policy_set(policies)
    b = as_policy(behavior)
    _same_k(pset, b)
    _require_positive(b, "behavior policy")
    logs = np.zeros_like(pset)
    support = pset > 0
    logs[support] = np.log((pset / b)[support])
    return float(np.mean(np.sum(pset * logs, axis=1)))


def max_importance_weight(policies, behavior):
    """Largest ratio ``pi(a) / behavior(a)`` over policies and actions.

    With ``behavior`` the barycenter of ``policies`` this is the maximal
    weight governing the sample-complexity bounds, and it never exceeds the
    number of policies.
    """
    pset = as_policy_set(policies)
    b = as_policy(behavior)
    _same_k(pset, b)
    _require_positive(b, "behavior policy")
    return float(np.max(pset / b))


def safe_mix(behavior, lam):
    """Defensive mixture ``(1 - lam) * behavior + lam * uniform``.

    The result is strictly positive with every entry at least ``lam / K``,
    even when ``behavior`` has zeros.
    """
    b = as_policy(behavior)
    if not 0.0 < lam < 1.0:
        raise InvalidArgumentError(f"lambda must lie in (0, 1), got {lam}")
    return (1.0 - lam) * b + lam / b.size
