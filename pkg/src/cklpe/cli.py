"""Command-line entry point.

Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.
"""

import argparse
import sys
from dataclasses import replace

from . import bounds as bnd
from .clustering import improvement_holds
from .errors import CKLPEError
from .harness import (
    ExperimentConfig,
    design_for,
    emit_csv,
    generate_testbed,
    load_config,
    misselection_rate,
    read_testbed,
    replication_rng,
    run_single,
    run_sweep,
    summarize,
    write_testbed,
)
from .policy import kl_barycenter, max_importance_weight


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS, help="experiment config file")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (overrides the config)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output path (default: stdout)")
    return p


def _testbed_flags(p):
    p.add_argument("--testbed", help="testbed file written by `gen` (default: generate from config)")
    p.add_argument(
        "--shared-group-weight",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="draw one extra weight per group instead of one per (policy, arm)",
    )


def build_parser():
    common = _common()
    parser = _Parser(prog="cklpe", description="Clustered KL-barycenter best-policy selection", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="write the synthetic testbed to a file")
    _testbed_flags(p)

    p = sub.add_parser("cluster", parents=[common], help="cluster the targets and report sigma_c")
    _testbed_flags(p)
    p.add_argument("--m", type=int, required=True, help="number of clusters")
    p.add_argument("--replication", type=int, default=0)

    p = sub.add_parser("eval", parents=[common], help="run one evaluation and print the selection")
    _testbed_flags(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--replication", type=int, default=0)

    p = sub.add_parser("sweep", parents=[common], help="full (M, n, replication) sweep to CSV")
    _testbed_flags(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--summary", action="store_true", help="print mean regret per (M, n) to stderr")

    p = sub.add_parser("bounds", parents=[common], help="evaluate a closed-form bound")
    which = p.add_mutually_exclusive_group(required=True)
    for flag, text in [
        ("--prop1", "samples for the single-barycenter method"),
        ("--prop3", "weight bound from eta"),
        ("--prop4", "samples to stay in the best cluster"),
        ("--thm1", "samples for the clustered method"),
        ("--safe", "weight bound for the safe mixture"),
        ("--safe-sqrt-eta", "safe weight bound with lam = sqrt(eta)"),
        ("--cor1", "expected regret bound"),
        ("--lowerprob", "misselection lower bound"),
    ]:
        which.add_argument(flag, action="store_true", help=text)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--rstar", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--n-targets", type=int, default=1)
    p.add_argument("--n-clusters", type=int, default=1)
    p.add_argument("--n1", type=int, default=1)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--lam", type=float)
    p.add_argument("--gap", type=float)
    p.add_argument("--k-arms", type=int, default=1)
    p.add_argument("--min-bary", type=float)
    p.add_argument("--delta-max", type=float)
    p.add_argument("--n", type=int)

    p = sub.add_parser("lowerbound", parents=[common], help="simulate the hard two-armed instance")
    p.add_argument("--n-policies", type=int, default=10)
    p.add_argument("--r1", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=20000)
    return parser


def _config(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if getattr(args, "shared_group_weight", None) is not None:
        cfg = replace(cfg, shared_group_weight=args.shared_group_weight)
    return cfg


def _testbed(args, cfg):
    if getattr(args, "testbed", None):
        return read_testbed(args.testbed)
    return generate_testbed(cfg)


def _emit_text(args, text):
    out = getattr(args, "out", None)
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {out}: {exc.strerror}") from exc
    else:
        sys.stdout.write(text)


def _cmd_gen(args):
    cfg = _config(args)
    model, policies = generate_testbed(cfg)
    out = getattr(args, "out", None)
    write_testbed(model, policies, out if out else sys.stdout)


def _cmd_cluster(args):
    cfg = _config(args)
    _, policies = _testbed(args, cfg)
    rng = replication_rng(cfg.master_seed, args.m, 0, args.replication).child("kmeans")
    design = design_for(policies, args.m, rng)
    sigma_kl = max_importance_weight(policies, kl_barycenter(policies))
    lines = ["cluster size sigma_c_j"]
    for j, (size, s) in enumerate(zip(design.assignment.sizes, design.sigma_per_cluster)):
        lines.append(f"{j} {size} {s:.17g}")
    lines += [
        f"sigma_c {design.sigma_c:.17g}",
        f"m_sigma_c_sq {design.m_sigma_c_sq:.17g}",
        f"sigma_kl {sigma_kl:.17g}",
        f"improvement {improvement_holds(design, sigma_kl)}",
    ]
    _emit_text(args, "\n".join(lines) + "\n")


def _cmd_eval(args):
    cfg = _config(args)
    model, policies = _testbed(args, cfg)
    rec = run_single(model, policies, args.m, args.n, replication_rng(cfg.master_seed, args.m, args.n, args.replication), args.replication)
    _emit_text(
        args,
        f"method {rec.method}\nselected_index {rec.selected_index}\nregret {rec.regret:.17g}\n"
        f"sigma_c {rec.sigma_c:.17g}\nm_sigma_c_sq {rec.m_sigma_c_sq:.17g}\n",
    )


def _cmd_sweep(args):
    cfg = _config(args)
    testbed = read_testbed(args.testbed) if args.testbed else None
    records = run_sweep(cfg, workers=args.workers, testbed=testbed)
    out = getattr(args, "out", None)
    emit_csv(records, out if out else sys.stdout)
    if args.summary:
        for row in summarize(records, cfg.master_seed):
            print(
                f"{row['method']} m={row['m']} n={row['n']} regret={row['mean_regret']:.6g} "
                f"[{row['ci_low']:.6g}, {row['ci_high']:.6g}] m_sigma_c_sq={row['mean_m_sigma_c_sq']:.6g}",
                file=sys.stderr,
            )


def _cmd_bounds(args):
    b = bnd.BoundInputs(
        epsilon=args.epsilon,
        delta=args.delta,
        r_star=args.rstar,
        sigma=args.sigma,
        n_targets=args.n_targets,
        n_clusters=args.n_clusters,
        n1=args.n1,
        eta=args.eta,
        lam=args.lam,
        gap=args.gap,
        k_arms=args.k_arms,
    )
    if args.prop1:
        value = bnd.sample_size_klpe(b)
    elif args.prop3:
        if args.min_bary is None:
            raise UsageError("--prop3 needs --min-bary")
        value = bnd.sigma_bound_from_eta(b, args.min_bary)
    elif args.prop4:
        value = bnd.sample_size_cluster_gate(b)
    elif args.thm1:
        value = bnd.sample_size_ckl(b)
    elif args.safe:
        value = bnd.sigma_safe_bound(b)
    elif args.safe_sqrt_eta:
        value = bnd.sigma_safe_bound_sqrt_eta(b)
    elif args.cor1:
        if args.delta_max is None or args.n is None:
            raise UsageError("--cor1 needs --delta-max and --n")
        value = bnd.expected_regret_bound(b, args.delta_max, args.n)
    else:
        if args.n is None:
            raise UsageError("--lowerprob needs --n")
        value = bnd.lower_bound_prob(args.n, args.sigma)
    _emit_text(args, (f"{value}" if isinstance(value, int) else f"{value:.17g}") + "\n")


def _cmd_lowerbound(args):
    seed = getattr(args, "seed", None)
    seed = 0 if seed is None else seed
    inst = bnd.lower_bound_model(args.n_policies, args.r1)
    rate = misselection_rate(inst, args.n, args.reps, seed)
    bound = bnd.lower_bound_prob(args.n, inst.sigma_n)
    se = (rate * (1 - rate) / args.reps) ** 0.5
    _emit_text(
        args,
        f"sigma_kl {inst.sigma_kl:.17g}\ngap {inst.gap:.17g}\n"
        f"empirical_rate {rate:.17g}\nstandard_error {se:.17g}\nlower_bound {bound:.17g}\n",
    )


_COMMANDS = {
    "gen": _cmd_gen,
    "cluster": _cmd_cluster,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "bounds": _cmd_bounds,
    "lowerbound": _cmd_lowerbound,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (CKLPEError, OSError) as exc:
        print(f"cklpe: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
