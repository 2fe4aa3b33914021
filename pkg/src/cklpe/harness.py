"""Experiment harness: synthetic testbed, single runs, sweeps and CSV output.

Config files are flat ``key = value`` text, one key per line. Lists are
comma-separated and nested lists (``preferred_arms``) are
semicolon-separated groups of comma-separated arm indices. Arm indices in
config files are 1-based; :class:`ExperimentConfig` stores them 0-based.
Blank lines and ``#`` comments are ignored. Example::

    k_arms = 100
    group_sizes = 25, 50, 25, 825, 50, 25
    preferred_arms = 2; 3,5; 22,24,34; 23,99; 99; 53
"""

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Tuple

import numpy as np

from .bandit import BanditModel, Bernoulli, Deterministic, Gaussian, RngState, stream_id_for
from .clustering import ClusteredDesign, hellinger_kmeans
from .errors import ConfigError, InvalidArgumentError, StrictPositivityError
from .estimators import allocate_samples, clustered_estimates, collect_dataset, select_best, true_values
from .policy import as_policy_set, column_mean, softmax_from_weights

log = logging.getLogger(__name__)

CSV_HEADER = ("method", "m", "n", "replication", "sigma_c", "m_sigma_c_sq", "regret", "selected_index", "seed")


@dataclass(frozen=True)
class ExperimentConfig:
    """Recipe for the synthetic testbed and the sweep grid.

    Defaults reproduce the 100-arm, 1000-policy setup with six planted
    groups of policies favoring particular arms.
    """

    k_arms: int = 100
    top_mean: float = 3.0
    mean_decay: float = 0.05
    variance_range: Tuple[float, float] = (1.0, 3.0)
    n_targets: int = 1000
    base_weight_range: Tuple[float, float] = (1.0, 2.0)
    group_sizes: Tuple[int, ...] = (25, 50, 25, 825, 50, 25)
    preferred_arms: Tuple[Tuple[int, ...], ...] = ((1,), (2, 4), (21, 23, 33), (22, 98), (98,), (52,))
    extra_weight_range: Tuple[float, float] = (1.0, 10.0)
    temperature: float = 1.0
    cluster_counts: Tuple[int, ...] = (1, 2, 5, 10, 20, 50, 1000)
    sample_sizes: Tuple[int, ...] = (1000, 2000, 5000, 10000)
    replications: int = 1000
    master_seed: int = 0
    shared_group_weight: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        def positive(name):
            if getattr(self, name) <= 0:
                raise ConfigError(name, f"must be positive, got {getattr(self, name)}")

        for name in ("k_arms", "n_targets", "temperature", "replications"):
            positive(name)
        if self.mean_decay < 0:
            raise ConfigError("mean_decay", "must be non-negative")
        for name in ("variance_range", "base_weight_range", "extra_weight_range"):
            rng = getattr(self, name)
            if len(rng) != 2 or not rng[0] < rng[1]:
                raise ConfigError(name, f"must be a (low, high) pair with low < high, got {rng}")
        if self.variance_range[0] <= 0:
            raise ConfigError("variance_range", "variances must be positive")
        if any(s < 1 for s in self.group_sizes) or sum(self.group_sizes) != self.n_targets:
            raise ConfigError("group_sizes", f"must be positive and sum to n_targets={self.n_targets}")
        if len(self.preferred_arms) != len(self.group_sizes):
            raise ConfigError("preferred_arms", "need one arm list per group")
        for arms in self.preferred_arms:
            if any(not 0 <= a < self.k_arms for a in arms):
                raise ConfigError("preferred_arms", f"arm index out of range in {arms}")
        if not self.cluster_counts or any(not 1 <= m <= self.n_targets for m in self.cluster_counts):
            raise ConfigError("cluster_counts", "each M must lie in [1, n_targets]")
        if not self.sample_sizes or any(n < 1 for n in self.sample_sizes):
            raise ConfigError("sample_sizes", "must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed", "must be a 64-bit unsigned integer")


_TUPLE_INT = {"group_sizes", "cluster_counts", "sample_sizes"}
_RANGES = {"variance_range", "base_weight_range", "extra_weight_range"}


def parse_config(text, base=None):
    """Parse config text into an :class:`ExperimentConfig`.

    Keys not present keep the values of ``base`` (default:
    ``ExperimentConfig()``).
    """
    known = {f.name: f for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(key, "unknown key")
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {value!r}: {exc}") from None
    return replace(base or ExperimentConfig(), **values)


def _parse_value(key, value):
    if key == "preferred_arms":
        groups = [g.strip() for g in value.split(";")]
        return tuple(tuple(int(a) - 1 for a in g.split(",") if a.strip()) for g in groups)
    if key in _TUPLE_INT:
        return tuple(int(v) for v in value.split(","))
    if key in _RANGES:
        return tuple(float(v) for v in value.split(","))
    if key == "shared_group_weight":
        if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError("expected a boolean")
        return value.lower() in ("true", "1", "yes")
    if key in ("k_arms", "n_targets", "replications", "master_seed"):
        return int(value)
    return float(value)


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text)


def format_config(cfg):
    """Render ``cfg`` in the config file format (round-trips through :func:`parse_config`)."""
    lines = []
    for key, value in asdict(cfg).items():
        if key == "preferred_arms":
            text = "; ".join(",".join(str(a + 1) for a in g) for g in value)
        elif isinstance(value, (tuple, list)):
            text = ", ".join(repr(v) for v in value)
        else:
            text = repr(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def testbed_rng(cfg):
    return RngState(cfg.master_seed, stream_id_for(cfg.master_seed, "testbed"))


def generate_testbed(cfg, rng=None):
    """Gaussian bandit with linearly decaying means and a structured softmax policy set.

    Draw order: arm variances, then base weights ``(N, K)``, then the group
    extra weights group by group. Extra weights are drawn independently per
    (policy, preferred arm), or once per group when
    ``cfg.shared_group_weight`` is set.
    """
    gen = (rng or testbed_rng(cfg)).generator()
    k = cfg.k_arms
    means = cfg.top_mean - cfg.mean_decay * np.arange(k)
    variances = gen.uniform(*cfg.variance_range, size=k)
    model = BanditModel.gaussian(means, variances)

    weights = gen.uniform(*cfg.base_weight_range, size=(cfg.n_targets, k))
    start = 0
    for size, arms in zip(cfg.group_sizes, cfg.preferred_arms):
        arms = list(arms)
        if arms:
            rows = slice(start, start + size)
            if cfg.shared_group_weight:
                weights[rows, arms] += gen.uniform(*cfg.extra_weight_range)
            else:
                weights[rows, arms] += gen.uniform(*cfg.extra_weight_range, size=(size, len(arms)))
        start += size
    return model, softmax_from_weights(weights, cfg.temperature)


@dataclass(frozen=True)
class RunRecord:
    method: str
    m: int
    n: int
    replication: int
    sigma_c: float
    m_sigma_c_sq: float
    regret: float
    selected_index: int
    seed: int


def method_name(m, n_targets):
    if m == 1:
        return "KLPE"
    if m == n_targets:
        return "MC"
    return "CKLPE"


def design_for(policies, m, rng):
    """Cluster ``policies`` into ``m`` groups and build the barycenter design.

    Vectorized equivalent of
    ``cluster_barycenters(policies, hellinger_kmeans(policies, m, rng=rng))``.
    """
    pset = as_policy_set(policies)
    if np.any(pset == 0.0):
        raise StrictPositivityError("every target policy must be strictly positive")
    assignment = hellinger_kmeans(pset, m, rng=rng)
    labels = assignment.labels
    order = np.argsort(labels, kind="stable")
    splits = np.cumsum(assignment.sizes)[:-1]
    barys = np.array([column_mean(block) for block in np.split(pset[order], splits)])
    sigmas = np.zeros(m)
    np.maximum.at(sigmas, labels, np.max(pset / barys[labels], axis=1))
    return ClusteredDesign(assignment, barys, sigmas)


def run_single(model, policies, m, n, rng, replication=0):
    """One clustered best-policy selection: cluster, sample, estimate, select.

    The k-means seeding and the sampling use independent child streams of
    ``rng``. ``m = 1`` is the single-barycenter method and ``m = N`` the
    per-policy Monte Carlo baseline.
    """
    pset = as_policy_set(policies)
    big_n = pset.shape[0]
    if not 1 <= m <= big_n:
        raise InvalidArgumentError(f"need 1 <= m <= N={big_n}, got m={m}")
    if n < m:
        raise InvalidArgumentError(f"need n >= m, got n={n}, m={m}")
    design = design_for(pset, m, rng.child("kmeans"))
    counts = allocate_samples(n, m)
    data = collect_dataset(model, design, counts, rng.child("draw"))
    sel = select_best(clustered_estimates(pset, design, data))
    v = true_values(model, pset)
    return RunRecord(
        method=method_name(m, big_n),
        m=int(m),
        n=int(n),
        replication=int(replication),
        sigma_c=design.sigma_c,
        m_sigma_c_sq=design.m_sigma_c_sq,
        regret=float(v.max() - v[sel.selected_index]),
        selected_index=sel.selected_index,
        seed=rng.stream_id,
    )


def replication_rng(master_seed, m, n, replication):
    return RngState(master_seed, stream_id_for(master_seed, m, n, replication))


def _run_block(args):
    model, policies, master_seed, m, n, reps = args
    return [run_single(model, policies, m, n, replication_rng(master_seed, m, n, r), r) for r in reps]


def sweep_grid(cfg):
    """``(m, n)`` pairs of the sweep; combinations with ``n < m`` are skipped."""
    grid = []
    for m in cfg.cluster_counts:
        for n in cfg.sample_sizes:
            if n < m:
                log.warning("skipping m=%d, n=%d: need at least one sample per cluster", m, n)
                continue
            grid.append((m, n))
    return grid


def sort_records(records):
    return sorted(records, key=lambda r: (r.method, r.m, r.n, r.replication))


def run_sweep(cfg, workers=1, testbed=None):
    """All records of the ``cluster_counts x sample_sizes x replications`` grid.

    The testbed is generated once from ``cfg.master_seed`` (unless given)
    and shared. Replication ``r`` of ``(m, n)`` runs on a stream keyed by
    ``(master_seed, m, n, r)``, so results do not depend on ``workers`` or
    on the order of the grid.
    """
    model, policies = testbed if testbed is not None else generate_testbed(cfg)
    blocks = []
    for m, n in sweep_grid(cfg):
        reps = list(range(cfg.replications))
        step = max(1, len(reps) // max(1, workers * 4))
        blocks += [(model, policies, cfg.master_seed, m, n, reps[i : i + step]) for i in range(0, len(reps), step)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_block, blocks))
    else:
        chunks = [_run_block(b) for b in blocks]
    return sort_records([rec for chunk in chunks for rec in chunk])


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(records, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, name)) for name in CSV_HEADER])


def emit_csv(records, destination):
    """Write records as CSV to a path or text stream (17 significant digits)."""
    if hasattr(destination, "write"):
        write_csv(records, destination)
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            write_csv(records, fh)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {destination}: {exc.strerror}") from exc


def csv_text(records):
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_csv(source):
    """Parse a CSV produced by :func:`emit_csv` back into records."""
    if hasattr(source, "read"):
        return _read_rows(source)
    with open(source, encoding="utf-8", newline="") as fh:
        return _read_rows(fh)


def _read_rows(stream):
    reader = csv.reader(stream)
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise InvalidArgumentError(f"unexpected CSV header {header}")
    types = {f.name: f.type for f in fields(RunRecord)}
    casts = {"str": str, "int": int, "float": float, str: str, int: int, float: float}
    return [RunRecord(**{k: casts[types[k]](v) for k, v in zip(header, row)}) for row in reader]


def write_testbed(model, policies, destination):
    """Serialize a testbed: one ``arm`` line per arm, then one ``policy`` line per policy."""
    lines = []
    for a, arm in enumerate(model.arms):
        if isinstance(arm, Gaussian):
            lines.append(f"arm {a} gaussian {arm.mean:.17g} {arm.variance:.17g}")
        elif isinstance(arm, Bernoulli):
            lines.append(f"arm {a} bernoulli {arm.p:.17g}")
        else:
            lines.append(f"arm {a} deterministic {arm.r:.17g}")
    for i, row in enumerate(as_policy_set(policies)):
        lines.append(f"policy {i} " + " ".join(f"{p:.17g}" for p in row))
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        Path(destination).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write testbed to {destination}: {exc.strerror}") from exc


def read_testbed(source):
    text = source.read() if hasattr(source, "read") else Path(source).read_text(encoding="utf-8")
    arms, rows = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        try:
            if parts[0] == "arm":
                kind, vals = parts[2], [float(v) for v in parts[3:]]
                cls = {"gaussian": Gaussian, "bernoulli": Bernoulli, "deterministic": Deterministic}[kind]
                arms[int(parts[1])] = cls(*vals)
            elif parts[0] == "policy":
                rows[int(parts[1])] = [float(v) for v in parts[2:]]
            else:
                raise ValueError(parts[0])
        except (ValueError, KeyError, TypeError, IndexError):
            raise InvalidArgumentError(f"testbed line {lineno} is malformed: {line!r}") from None
    model = BanditModel(tuple(arms[a] for a in sorted(arms)))
    return model, as_policy_set([rows[i] for i in sorted(rows)])


def sigma_profile(policies, cluster_counts, replications, master_seed):
    """``M sigma_c^2`` for each cluster count, one value per k-means seeding.

    Returns a dict mapping ``M`` to an array of length ``replications``.
    """
    pset = as_policy_set(policies)
    out = {}
    for m in cluster_counts:
        vals = [
            design_for(pset, m, RngState(master_seed, stream_id_for(master_seed, "profile", m, r))).m_sigma_c_sq
            for r in range(replications)
        ]
        out[m] = np.array(vals)
    return out


def bootstrap_ci(values, rng, n_boot=2000, level=0.95):
    """Percentile bootstrap interval for the mean of ``values``."""
    x = np.asarray(values, dtype=float)
    gen = rng.generator() if isinstance(rng, RngState) else rng
    idx = gen.integers(0, x.size, size=(n_boot, x.size))
    means = x[idx].mean(axis=1)
    alpha = (1 - level) / 2
    return float(np.quantile(means, alpha)), float(np.quantile(means, 1 - alpha))


def summarize(records, master_seed=0, n_boot=2000):
    """Mean regret with a 95% bootstrap interval per ``(method, m, n)``."""
    groups = {}
    for rec in records:
        groups.setdefault((rec.method, rec.m, rec.n), []).append(rec)
    rows = []
    for (method, m, n), recs in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][2])):
        regrets = np.array([r.regret for r in recs])
        lo, hi = bootstrap_ci(regrets, RngState(master_seed, stream_id_for(master_seed, "boot", m, n)), n_boot)
        rows.append(
            {
                "method": method,
                "m": m,
                "n": n,
                "runs": len(recs),
                "mean_regret": float(regrets.mean()),
                "ci_low": lo,
                "ci_high": hi,
                "mean_m_sigma_c_sq": float(np.mean([r.m_sigma_c_sq for r in recs])),
            }
        )
    return rows


def misselection_rate(instance, n, reps, master_seed=0):
    """Fraction of single-barycenter runs on a lower-bound instance that miss policy 0."""
    pset = instance.policies
    design = design_for(pset, 1, RngState(master_seed))
    misses = 0
    for r in range(int(reps)):
        rng = RngState(master_seed, stream_id_for(master_seed, "lowerbound", n, r))
        data = collect_dataset(instance.model, design, [n], rng)
        misses += select_best(clustered_estimates(pset, design, data)).selected_index != 0
    return misses / int(reps)
