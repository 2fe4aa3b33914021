"""Seeded stochastic multi-armed bandit environment."""

import hashlib
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import InvalidArgumentError
from .policy import as_policy


@dataclass(frozen=True)
class Gaussian:
    """Normal rewards with the given mean and variance."""

    mean: float
    variance: float

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.variance)) or self.variance <= 0:
            raise InvalidArgumentError(f"Gaussian needs finite mean and variance > 0, got {self}")

    @property
    def expected(self):
        return float(self.mean)

    @property
    def subgaussian(self):
        return float(np.sqrt(self.variance))


@dataclass(frozen=True)
class Bernoulli:
    """Rewards in {0, 1} with success probability ``p``."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidArgumentError(f"Bernoulli p must lie in [0, 1], got {self.p}")

    @property
    def expected(self):
        return float(self.p)

    @property
    def subgaussian(self):
        return 0.5


@dataclass(frozen=True)
class Deterministic:
    """Constant reward ``r``."""

    r: float

    def __post_init__(self):
        if not np.isfinite(self.r):
            raise InvalidArgumentError(f"Deterministic reward must be finite, got {self.r}")

    @property
    def expected(self):
        return float(self.r)

    @property
    def subgaussian(self):
        return 0.0


RewardDistribution = Union[Gaussian, Bernoulli, Deterministic]

_GAUSS, _BERN, _DET = 0, 1, 2


@dataclass(frozen=True)
class BanditModel:
    """A bandit with one reward distribution per arm."""

    arms: Sequence[RewardDistribution]

    def __post_init__(self):
        arms = tuple(self.arms)
        if not arms:
            raise InvalidArgumentError("a bandit model needs at least one arm")
        for arm in arms:
            if not isinstance(arm, (Gaussian, Bernoulli, Deterministic)):
                raise InvalidArgumentError(f"unsupported reward distribution {arm!r}")
        object.__setattr__(self, "arms", arms)

    @property
    def k(self):
        return len(self.arms)

    @cached_property
    def means(self):
        """Exact mean reward of every arm, as an array."""
        return np.array([arm.expected for arm in self.arms])

    @cached_property
    def _tables(self):
        kinds = np.empty(self.k, dtype=np.int8)
        loc = np.zeros(self.k)
        scale = np.zeros(self.k)
        for a, arm in enumerate(self.arms):
            if isinstance(arm, Gaussian):
                kinds[a], loc[a], scale[a] = _GAUSS, arm.mean, np.sqrt(arm.variance)
            elif isinstance(arm, Bernoulli):
                kinds[a], loc[a] = _BERN, arm.p
            else:
                kinds[a], loc[a] = _DET, arm.r
        return kinds, loc, scale

    @classmethod
    def gaussian(cls, means, variances):
        return cls(tuple(Gaussian(float(m), float(v)) for m, v in zip(means, variances, strict=True)))

    @classmethod
    def deterministic(cls, rewards):
        return cls(tuple(Deterministic(float(r)) for r in rewards))

    @classmethod
    def bernoulli(cls, probs):
        return cls(tuple(Bernoulli(float(p)) for p in probs))


def _mix64(*parts):
    """Stable 64-bit hash of a tuple of ints and strings."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, str):
            data = part.encode()
            h.update(b"s" + struct.pack("<Q", len(data)) + data)
        else:
            h.update(b"i" + struct.pack("<Q", int(part) & 0xFFFFFFFFFFFFFFFF))
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class RngState:
    """Key of an independent random stream.

    Streams are built with numpy's ``SeedSequence`` using ``master_seed`` as
    entropy and ``stream_id`` as spawn key, so equal keys reproduce equal
    draws and distinct stream ids give independent streams.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.stream_id < 0:
            raise InvalidArgumentError(f"stream_id must be non-negative, got {self.stream_id}")

    def generator(self):
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(int(self.stream_id),),
        )
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, *tags):
        """Derived stream keyed by this stream id and ``tags`` (ints or strings)."""
        return RngState(self.master_seed, _mix64(self.stream_id, *tags))


def stream_id_for(master_seed, *parts):
    """Stream id derived from ``master_seed`` and a tuple of ints/strings."""
    return _mix64(master_seed, *parts)


def _as_generator(rng):
    if isinstance(rng, RngState):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise InvalidArgumentError(f"expected an RngState or numpy Generator, got {type(rng).__name__}")


def mean_reward(model, a):
    """Exact expected reward of arm ``a``."""
    if not 0 <= a < model.k:
        raise InvalidArgumentError(f"action {a} out of range for {model.k} arms")
    return model.arms[a].expected


def policy_value(model, pi):
    """Exact value ``sum_a pi(a) Q(a)``. No sampling is involved."""
    pi = as_policy(pi)
    if pi.size != model.k:
        raise InvalidArgumentError(f"policy has {pi.size} actions but the model has {model.k} arms")
    return float(pi @ model.means)


def subgaussian_param(model):
    """Largest per-arm subgaussian constant (sd for Gaussian, 1/2 for Bernoulli)."""
    return max(arm.subgaussian for arm in model.arms)


class Samples(NamedTuple):
    actions: np.ndarray
    rewards: np.ndarray


def draw(model, behavior, n, rng):
    """Draw ``n`` iid (action, reward) pairs under ``behavior``.

    Actions come from inverse-CDF lookup of ``n`` uniforms in the cumulative
    action probabilities (index order). Rewards are then drawn in one
    vectorized pass: ``n`` standard normals (numpy's default method) if any
    arm is Gaussian, followed by ``n`` uniforms if any arm is Bernoulli.

    ``rng`` is an :class:`RngState`, or a numpy ``Generator`` to continue an
    existing stream.
    """
    b = as_policy(behavior)
    if b.size != model.k:
        raise InvalidArgumentError(f"behavior has {b.size} actions but the model has {model.k} arms")
    n = int(n)
    if n < 1:
        raise InvalidArgumentError(f"n must be positive, got {n}")
    gen = _as_generator(rng)

    actions = _inverse_cdf(b[None, :], np.zeros(n, dtype=np.int64), gen.random(n))
    return Samples(actions, _rewards(model, actions, gen))


_CHUNK = 1 << 15


def _inverse_cdf(probs, rows, u):
    """Action index per uniform: the number of cumulative entries <= u.

    ``rows[t]`` selects the row of ``probs`` used for draw ``t``.
    """
    k = probs.shape[1]
    cdfs = np.cumsum(probs, axis=1)
    if cdfs.shape[0] == 1:
        actions = np.searchsorted(cdfs[0], u, side="right")
    else:
        actions = np.empty(u.size, dtype=np.int64)
        for start in range(0, u.size, _CHUNK):
            sl = slice(start, start + _CHUNK)
            actions[sl] = np.count_nonzero(u[sl, None] >= cdfs[rows[sl]], axis=1)
    # round-off can leave cdf[-1] < 1; fall back to the last action with mass
    last = k - 1 - np.argmax(probs[:, ::-1] > 0, axis=1)
    return np.minimum(actions, last[rows]).astype(np.int64)


def _rewards(model, actions, gen):
    n = actions.size
    kinds, loc, scale = model._tables
    kind = kinds[actions]
    rewards = loc[actions].copy()
    if np.any(kinds == _GAUSS):
        z = gen.standard_normal(n)
        gauss = kind == _GAUSS
        rewards[gauss] += scale[actions[gauss]] * z[gauss]
    if np.any(kinds == _BERN):
        u = gen.random(n)
        bern = kind == _BERN
        rewards[bern] = (u[bern] < loc[actions[bern]]).astype(float)
    return rewards


def draw_many(model, behaviors, counts, rng):
    """Draw ``counts[j]`` pairs under ``behaviors[j]`` for every ``j`` from one stream.

    All action uniforms are drawn first (cluster by cluster), then all
    reward noise, so the result for a single behavior equals :func:`draw`.
    Returns one :class:`Samples` per behavior.
    """
    bs = np.array([as_policy(b) for b in behaviors])
    counts = np.asarray(counts, dtype=np.int64)
    if bs.ndim != 2 or bs.shape[1] != model.k:
        raise InvalidArgumentError(f"behaviors must be (M, {model.k}), got shape {bs.shape}")
    if counts.shape != (bs.shape[0],) or np.any(counts < 1):
        raise InvalidArgumentError("need one positive count per behavior")
    gen = _as_generator(rng)
    rows = np.repeat(np.arange(bs.shape[0]), counts)
    actions = _inverse_cdf(bs, rows, gen.random(rows.size))
    rewards = _rewards(model, actions, gen)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    return [Samples(actions[lo:hi], rewards[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:])]
