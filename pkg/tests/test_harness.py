import io
from dataclasses import replace

import numpy as np
import pytest

from cklpe.bandit import RngState
from cklpe.bounds import lower_bound_model
from cklpe.clustering import cluster_barycenters, hellinger_kmeans
from cklpe.errors import ConfigError, InvalidArgumentError
from cklpe.estimators import kl_pe
from cklpe.harness import (
    CSV_HEADER,
    ExperimentConfig,
    RunRecord,
    bootstrap_ci,
    csv_text,
    design_for,
    emit_csv,
    format_config,
    generate_testbed,
    parse_config,
    read_csv,
    read_testbed,
    replication_rng,
    run_single,
    run_sweep,
    write_testbed,
)
from cklpe.policy import kl_barycenter

SMALL = ExperimentConfig(
    k_arms=10,
    n_targets=30,
    group_sizes=(10, 20),
    preferred_arms=((1,), (2, 4)),
    cluster_counts=(1, 3, 30),
    sample_sizes=(30, 60),
    replications=3,
    master_seed=7,
)


def test_default_config_matches_recipe():
    cfg = ExperimentConfig()
    assert cfg.k_arms == 100 and cfg.n_targets == 1000 and cfg.top_mean == 3.0 and cfg.mean_decay == 0.05
    assert cfg.group_sizes == (25, 50, 25, 825, 50, 25)
    # 1-based in the recipe, 0-based here
    assert cfg.preferred_arms == ((1,), (2, 4), (21, 23, 33), (22, 98), (98,), (52,))
    assert cfg.variance_range == (1, 3) and cfg.base_weight_range == (1, 2) and cfg.extra_weight_range == (1, 10)


@pytest.mark.parametrize(
    "field, kwargs",
    [
        ("group_sizes", dict(group_sizes=(10, 10))),
        ("preferred_arms", dict(preferred_arms=((200,), (1,), (1,), (1,), (1,), (1,)))),
        ("variance_range", dict(variance_range=(3, 1))),
        ("temperature", dict(temperature=0)),
        ("cluster_counts", dict(cluster_counts=(2000,))),
    ],
)
def test_config_errors_name_the_field(field, kwargs):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig(**kwargs)
    assert info.value.field == field


def test_config_parse_and_format_round_trip():
    text = "k_arms = 10\nn_targets = 30  # comment\ngroup_sizes = 10, 20\npreferred_arms = 2; 3,5\n\nsample_sizes=30,60\ncluster_counts = 1, 30\n"
    cfg = parse_config(text)
    assert cfg.preferred_arms == ((1,), (2, 4))
    assert cfg.sample_sizes == (30, 60)
    assert parse_config(format_config(SMALL)) == SMALL
    assert parse_config(format_config(ExperimentConfig())) == ExperimentConfig()


@pytest.mark.parametrize("text, field", [("nope = 1", "nope"), ("k_arms = x", "k_arms"), ("k_arms 3", "line 1"), ("shared_group_weight = maybe", "shared_group_weight")])
def test_config_parse_errors(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field


def test_testbed_structure():
    model, pset = generate_testbed(SMALL)
    np.testing.assert_allclose(model.means, 3 - 0.05 * np.arange(10))
    variances = np.array([a.variance for a in model.arms])
    assert np.all((variances >= 1) & (variances <= 3))
    assert pset.shape == (30, 10) and np.all(pset > 0)
    np.testing.assert_allclose(pset.sum(axis=1), 1, atol=1e-12)
    # group 0 puts more mass on its preferred arm than group 1 does
    assert pset[:10, 1].mean() > pset[10:, 1].mean()
    m2, p2 = generate_testbed(SMALL)
    np.testing.assert_array_equal(pset, p2)


def test_testbed_weight_modes():
    shared = replace(SMALL, shared_group_weight=True)
    indep = replace(SMALL, shared_group_weight=False)
    _, ps = generate_testbed(shared)
    _, pi = generate_testbed(indep)

    # log-odds of group 0's preferred arm against arm 0 is extra + (base_1 - base_0)
    def spread(p):
        return np.ptp(np.log(p[:10, 1]) - np.log(p[:10, 0]))

    assert spread(ps) < 2.0
    assert spread(pi) > 2.0


def test_exchangeable_testbed_barycenter_near_uniform():
    cfg = ExperimentConfig(k_arms=10, n_targets=1000, group_sizes=(1000,), preferred_arms=((),), cluster_counts=(1,))
    _, pset = generate_testbed(cfg)
    assert np.max(np.abs(kl_barycenter(pset) - 0.1)) < 0.01


def test_testbed_file_round_trip(tmp_path):
    model, pset = generate_testbed(SMALL)
    path = tmp_path / "tb.txt"
    write_testbed(model, pset, path)
    first = path.read_text().splitlines()
    assert first[0].startswith("arm 0 gaussian ") and first[10].startswith("policy 0 ")
    m2, p2 = read_testbed(path)
    np.testing.assert_array_equal(p2, pset)
    assert m2 == model


def test_design_for_matches_reference_path():
    _, pset = generate_testbed(SMALL)
    for m in (1, 3, 30):
        rng = RngState(1, m)
        d = design_for(pset, m, rng)
        ref = cluster_barycenters(pset, hellinger_kmeans(pset, m, rng=rng))
        np.testing.assert_array_equal(d.barycenters, ref.barycenters)
        np.testing.assert_array_equal(d.sigma_per_cluster, ref.sigma_per_cluster)


def test_run_single_m1_matches_klpe():
    model, pset = generate_testbed(SMALL)
    rng = replication_rng(7, 1, 60, 0)
    rec = run_single(model, pset, 1, 60, rng)
    direct = kl_pe(model, pset, 60, rng.child("draw"))
    assert rec.method == "KLPE"
    assert rec.selected_index == direct.selected_index and rec.regret == direct.regret


def test_run_single_tags_and_invariants():
    model, pset = generate_testbed(SMALL)
    for m, method in ((1, "KLPE"), (3, "CKLPE"), (30, "MC")):
        rec = run_single(model, pset, m, 60, replication_rng(7, m, 60, 0))
        assert rec.method == method and rec.regret >= 0
        assert rec.m_sigma_c_sq == pytest.approx(m * rec.sigma_c**2, rel=1e-15)
    mc = run_single(model, pset, 30, 30, replication_rng(7, 30, 30, 0))
    assert mc.sigma_c == 1 and mc.m_sigma_c_sq == 30


def test_run_single_on_lower_bound_instance_singletons():
    # each policy is its own behavior: estimates are empirical means and regret is 0 or the gap
    inst = lower_bound_model(10)
    recs = [run_single(inst.model, inst.policies, 10, n, RngState(3, n)) for n in range(10, 60)]
    for rec in recs:
        assert rec.regret == 0.0 or rec.regret == pytest.approx(inst.gap, abs=1e-15)
        assert rec.sigma_c == 1
    assert sum(rec.regret == 0 for rec in recs) > 40


def test_run_single_rejects_bad_sizes():
    model, pset = generate_testbed(SMALL)
    with pytest.raises(InvalidArgumentError):
        run_single(model, pset, 31, 100, RngState(0))
    with pytest.raises(InvalidArgumentError):
        run_single(model, pset, 3, 2, RngState(0))


def test_sweep_cardinality_and_worker_independence():
    recs = run_sweep(SMALL)
    assert len(recs) == 3 * 2 * 3
    assert {(r.m, r.n, r.replication) for r in recs} == {(m, n, r) for m in (1, 3, 30) for n in (30, 60) for r in range(3)}
    assert csv_text(run_sweep(SMALL, workers=2)) == csv_text(recs)
    one = run_sweep(replace(SMALL, cluster_counts=(3,), sample_sizes=(60,), replications=1))
    assert len(one) == 1


def test_sweep_skips_undersized_cells(caplog):
    recs = run_sweep(replace(SMALL, cluster_counts=(30,), sample_sizes=(20, 30), replications=1))
    assert [(r.m, r.n) for r in recs] == [(30, 30)]
    assert "skipping" in caplog.text


def test_csv_format_and_round_trip(tmp_path):
    buf = io.StringIO()
    emit_csv([], buf)
    assert buf.getvalue() == "method,m,n,replication,sigma_c,m_sigma_c_sq,regret,selected_index,seed\n"
    rec = RunRecord("CKLPE", 3, 60, 2, 1.0 / 3 + 1, 3 * (4 / 3) ** 2, 0.1 + 0.2, 17, 2**64 - 1)
    path = tmp_path / "out.csv"
    emit_csv([rec], path)
    text = path.read_bytes().decode("utf-8")
    assert text.count("\n") == 2 and text.endswith("\n")
    assert "0.30000000000000004" in text
    assert read_csv(path) == [rec]
    assert tuple(text.splitlines()[0].split(",")) == CSV_HEADER
    with pytest.raises(OSError, match="nonexistent"):
        emit_csv([rec], tmp_path / "nonexistent" / "x.csv")


def test_bootstrap_ci_brackets_mean():
    x = np.random.default_rng(0).normal(1.0, 1.0, 500)
    lo, hi = bootstrap_ci(x, RngState(0))
    assert lo < x.mean() < hi and hi - lo < 0.3
