"""Command line entry point: experiments, aggregation and verification suites."""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from divexp.config import CONTROL_DEFAULTS, GRIDWORLD_DEFAULT, ExperimentConfig, dump_config, load_config
from divexp.harness import checks
from divexp.harness.metrics import (aggregate, confirmations, empirical_error_rate, exact_evaluator,
                                    iteration_rows, read_confirmations_csv, read_iterations_csv,
                                    read_summary_csv, rollout_evaluator, summarize_run, write_confirmations_csv,
                                    write_iterations_csv, write_summary_csv)
from divexp.loop import make_domain, run_experiment
from divexp.mdp import TRAJECTORY_FIELDS, trajectory_lines

log = logging.getLogger("divexp")


def parse_seeds(text: str) -> list[int]:
    """'A..B' (inclusive) or a single integer."""
    if ".." in text:
        lo, hi = (int(x) for x in text.split("..", 1))
    else:
        lo = hi = int(text)
    if hi < lo:
        raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
    return list(range(lo, hi + 1))


def resolve_config(path, domain=None) -> ExperimentConfig:
    if path:
        return load_config(path)
    if domain and domain != "gridworld":
        return CONTROL_DEFAULTS[domain]
    return GRIDWORLD_DEFAULT


def run_one(cfg: ExperimentConfig, algo: str, out_dir: Path, rollouts: int):
    """Run a single seed and write its private directory; returns (summary, confirmations, rows)."""
    records = run_experiment(cfg, algo)
    env, spec, _ = make_domain(cfg)
    grid = cfg.domain == "gridworld"
    evaluate = exact_evaluator(env) if grid else rollout_evaluator(env, spec, rollouts, seed=cfg.seed)
    audit = confirmations(records, cfg.seed, algo, evaluate)
    summary = summarize_run(records, cfg.seed, algo, audit, grid=grid)
    rows = iteration_rows(records, cfg.seed, algo)
    run_dir = out_dir / f"run-{cfg.seed:04d}"
    run_dir.mkdir(parents=True, exist_ok=True)
    write_iterations_csv(run_dir / "iterations.csv", rows)
    write_summary_csv(run_dir / "summary.csv", [summary])
    write_confirmations_csv(run_dir / "confirmations.csv", audit)
    with open(run_dir / "candidates.csv", "w") as fh:
        fh.write("iter,candidate_id,lineage,lower_bound,p_value,confirmed\n")
        for rec in records:
            for cand in rec.candidates:
                pid = cand.policy_id
                fh.write(f"{rec.iteration},{pid},{cand.lineage.replace(',', ';')},{rec.lower_bounds[pid]!r},"
                         f"{rec.p_values[pid]!r},{int(pid in rec.confirmed)}\n")
    with open(run_dir / "trajectories.csv", "w") as fh:
        fh.write(",".join(TRAJECTORY_FIELDS) + "\n")
        for rec in records:
            fh.writelines(line + "\n" for line in trajectory_lines(rec.collected, run=cfg.seed))
    return summary, audit, rows


def _run_job(job):
    cfg, algo, out_dir, rollouts = job
    return run_one(cfg, algo, out_dir, rollouts)


def cmd_run(args) -> int:
    cfg = resolve_config(args.config, args.domain)
    out = Path(args.out) / args.algo
    out.mkdir(parents=True, exist_ok=True)
    seeds = parse_seeds(args.seeds)
    echo = dump_config(cfg) + (f"# config_hash = {cfg.digest()}\n# algo = {args.algo}\n"
                               f"# seeds = {seeds[0]}..{seeds[-1]}\n# command = {' '.join(sys.argv)}\n")
    (out / "config.echo").write_text(echo)
    jobs = [(cfg.replace(seed=s), args.algo, out, args.rollouts) for s in seeds]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(job) for job in jobs]
    summaries = [r[0] for r in results]
    write_summary_csv(out / "summary.csv", summaries)
    write_iterations_csv(out / "iterations.csv", [row for r in results for row in r[2]])
    write_confirmations_csv(out / "confirmations.csv", [c for r in results for c in r[1]])
    for s in summaries:
        print(f"run {s.run} {s.algo}: aggregate={s.aggregate_return:.4f} final={s.final_return:.4f} "
              f"iters_to_optimal={s.iters_to_optimal} unsafe={s.unsafe_count}")
    print(f"config {cfg.digest()} -> {out}")
    return 0


def cmd_aggregate(args) -> int:
    root = Path(args.runs)
    summaries, rows, audit = [], [], []
    for algo in args.algos:
        summaries += read_summary_csv(root / algo / "summary.csv")
        rows += read_iterations_csv(root / algo / "iterations.csv")
        path = root / algo / "confirmations.csv"
        if path.exists():
            audit += read_confirmations_csv(path)
    cmp = aggregate(summaries, rows, tuple(args.algos))
    a, b = cmp.algos
    print(f"runs: {len(cmp.runs)}")
    for algo in cmp.algos:
        print(f"{algo}: mean aggregate return {cmp.mean_aggregate[algo]:.4f}, mean final return "
              f"{cmp.mean_final[algo]:.4f}")
    t = cmp.aggregate_test
    print(f"{a} - {b} aggregate: mean {t.mean_difference:.4f}, t={t.t_statistic:.3f}, p={t.p_value:.4g}, "
          f"{a} wins {cmp.wins}/{len(cmp.runs)}")
    print(f"iterations to optimal ({cmp.both_optimal_runs} runs where both confirm one): "
          + ", ".join(f"{k}={v:.2f}" for k, v in cmp.iters_to_optimal.items()))
    rate, count = empirical_error_rate(audit)
    print(f"empirical error rate: {rate:.4f} over {count} confirmations")
    out = root / "aggregate.csv"
    with open(out, "w") as fh:
        fh.write(f"iter,{a}_mean_return,{b}_mean_return,mean_difference,t_statistic,p_value\n")
        for i, p in enumerate(cmp.paired, start=1):
            fh.write(f"{i},{cmp.curves[a][i - 1]!r},{cmp.curves[b][i - 1]!r},{p.mean_difference!r},"
                     f"{p.t_statistic!r},{p.p_value!r}\n")
    print(f"per-iteration table -> {out}")
    return 0


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def cmd_verify_theory(args) -> int:
    instances, mismatches = checks.lemma1_check()
    print(f"lemma1: {_status(mismatches == 0)} ({instances} instances)")
    reports = checks.theorem1_check(args.trials)
    ok1 = all(r.passed for r in reports.values())
    detail = ", ".join(f"m={m}: {r.checks} optima, {r.violations} violations" for m, r in reports.items())
    print(f"theorem1: {_status(ok1)} ({detail})")
    worst = checks.theorem2_check(args.trials)
    print(f"theorem2: {_status(worst <= 1e-12)} (max |Δ|={worst:.0e})")
    return 0 if mismatches == 0 and ok1 and worst <= 1e-12 else 1


def cmd_verify_ope(args) -> int:
    res = checks.is_unbiasedness(args.samples, seed=args.seed)
    print(f"unbiasedness: {_status(res.passed)} (mean={res.mean:.5f}, exact={res.exact:.5f}, "
          f"se={res.std_error:.5f}, z={res.z:+.2f})")
    rate = checks.t_bound_violation_rate(seed=args.seed)
    print(f"coverage: {_status(rate <= 0.07)} (violation rate {rate:.4f}, limit 0.07)")
    fdp = checks.bh_false_discovery(seed=args.seed)
    print(f"fdr: {_status(fdp <= 0.06)} (mean false discovery proportion {fdp:.4f}, limit 0.06)")
    return 0 if res.passed and rate <= 0.07 and fdp <= 0.06 else 1


def cmd_enumerate(args) -> int:
    from divexp.envs.gridworld import FAMILY_SIZE, family_quality, optimal_family_indices
    q = family_quality(np.arange(FAMILY_SIZE))
    finite = q[np.isfinite(q)].astype(int)
    print(f"policies: {FAMILY_SIZE}")
    print(f"optimal: {int(np.sum(q == 0))}")
    print(f"never reach goal: {int(np.sum(~np.isfinite(q)))}")
    if args.out:
        counts = np.bincount(finite)
        with open(args.out, "w") as fh:
            fh.write("extra_steps,count\n")
            for steps, c in enumerate(counts):
                if c:
                    fh.write(f"{steps},{c}\n")
            fh.write(f"inf,{int(np.sum(~np.isfinite(q)))}\n")
    if args.list_optimal:
        for idx in optimal_family_indices():
            print(int(idx))
    return 0


def cmd_diversity(args) -> int:
    from divexp.theory import diversity_histogram
    hist = diversity_histogram(args.cap)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write("quality,count,diversity,pairs\n")
        for q, bucket in hist.items():
            for d, pairs in enumerate(bucket["diversity"]):
                if d > 0:
                    out.write(f"{q},{bucket['count']},{d},{int(pairs)}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divexp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run seeded experiments for one algorithm")
    p.add_argument("--config", help="flat key = value config file (default: built-in grid-world config)")
    p.add_argument("--domain", choices=("gridworld", "mountaincar", "acrobot"),
                   help="built-in defaults for a domain when --config is not given")
    p.add_argument("--algo", choices=("de", "spi"), required=True)
    p.add_argument("--seeds", default="0..9", help="inclusive range A..B")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--rollouts", type=int, default=100,
                   help="episodes per confirmed policy when auditing domains without an exact model")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("aggregate", help="compare algorithms over matching seeds")
    p.add_argument("--runs", required=True, help="the --out directory of earlier run commands")
    p.add_argument("--algos", nargs=2, default=["de", "spi"])
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("verify-theory", help="allocation lemma and theorem checks")
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_verify_theory)

    p = sub.add_parser("verify-ope", help="Monte Carlo checks of the off-policy evaluation")
    p.add_argument("--samples", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_ope)

    p = sub.add_parser("enumerate-gridworld", help="census of the deterministic grid-world policy family")
    p.add_argument("--out", help="write the extra-steps histogram as CSV")
    p.add_argument("--list-optimal", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("diversity", help="pairwise diversity per quality bucket, as CSV")
    p.add_argument("--cap", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diversity)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
