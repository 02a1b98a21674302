"""Per-run summaries, safety audits and cross-run comparison."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from divexp.envs.gridworld import greedy_interior_actions, is_optimal_action_map
from divexp.mdp import generate_trajectory, normalized_return
from divexp.stats import t_sf

ITERATION_FIELDS = ("run", "iter", "algo", "n_deployed", "rho_baseline", "n_confirmed", "mean_return",
                    "joint_entropy")
SUMMARY_FIELDS = ("run", "algo", "aggregate_return", "final_return", "iters_to_optimal", "unsafe_count")
CONFIRMATION_FIELDS = ("run", "algo", "iter", "policy_id", "rho_baseline", "lower_bound", "true_value")


@dataclass
class RunSummary:
    run: int
    algo: str
    aggregate_return: float
    final_return: float
    iters_to_optimal: int | None
    unsafe_count: int


@dataclass
class Confirmation:
    run: int
    algo: str
    iter: int
    policy_id: str
    rho_baseline: float
    lower_bound: float
    true_value: float

    @property
    def false_safe(self) -> bool:
        return self.true_value < self.rho_baseline


def exact_evaluator(env):
    """True value of a tabular grid-world policy by dynamic programming."""
    return lambda policy: env.exact_value(policy.table)


def rollout_evaluator(env, spec, episodes: int = 100, seed: int = 0):
    """Monte Carlo estimate of a policy's expected normalized return."""
    def evaluate(policy):
        rng = np.random.default_rng(seed)
        return float(np.mean([normalized_return(generate_trajectory(env, policy, rng, spec), spec)
                              for _ in range(episodes)]))
    return evaluate


def iterations_to_optimal(records) -> int | None:
    """First iteration that confirms a candidate whose target acts optimally on every interior state."""
    for rec in records:
        confirmed = set(rec.confirmed)
        for cand in rec.candidates:
            if cand.policy_id in confirmed and is_optimal_action_map(greedy_interior_actions(cand.target)):
                return rec.iteration
    return None


def confirmations(records, run: int, algo: str, evaluate) -> list[Confirmation]:
    out = []
    for rec in records:
        by_id = {c.policy_id: c for c in rec.candidates}
        for pid in rec.confirmed:
            out.append(Confirmation(run, algo, rec.iteration, pid, rec.rho_baseline, rec.lower_bounds[pid],
                                    float(evaluate(by_id[pid]))))
    return out


def summarize_run(records, run: int, algo: str, audit: list[Confirmation], grid: bool = True) -> RunSummary:
    returns = [rec.mean_return for rec in records]
    return RunSummary(run, algo, float(sum(returns)), float(returns[-1]),
                      iterations_to_optimal(records) if grid else None,
                      sum(c.false_safe for c in audit))


def empirical_error_rate(audit) -> tuple[float, int]:
    """(fraction of confirmations whose true value is below their baseline, number of confirmations)."""
    audit = list(audit)
    if not audit:
        return 0.0, 0
    return sum(c.false_safe for c in audit) / len(audit), len(audit)


def binomial_upper_tail(k: int, n: int, p: float) -> float:
    """P(X >= k) for X ~ Binomial(n, p), summed in log space so large n does not overflow."""
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    if p <= 0.0 or p >= 1.0:
        return float(p >= 1.0)
    log_pmf = [math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)
               + i * math.log(p) + (n - i) * math.log1p(-p) for i in range(k, n + 1)]
    top = max(log_pmf)
    return min(1.0, math.exp(top) * math.fsum(math.exp(v - top) for v in log_pmf))


def deployment_audit(records, initial_id: str = "pi0") -> list[str]:
    """Deployments that are neither the starting policy, a fresh confirmation, nor a carry-over."""
    problems = []
    if records and records[0].deployed != [initial_id]:
        problems.append(f"iteration 1 deployed {records[0].deployed}")
    for prev, rec in zip(records, records[1:]):
        expected = list(prev.confirmed) if prev.confirmed else list(prev.deployed)
        if rec.deployed != expected:
            problems.append(f"iteration {rec.iteration}: deployed {rec.deployed}, expected {expected}")
        if not set(prev.confirmed) <= set(prev.candidate_ids):
            problems.append(f"iteration {prev.iteration}: confirmed ids outside the candidate set")
    return problems


# -- cross-run comparison ----------------------------------------------------------


@dataclass
class PairedTest:
    mean_difference: float
    t_statistic: float
    p_value: float
    n: int


def paired_t_test(a, b) -> PairedTest:
    """Two-sided paired t-test of a - b."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    n = len(d)
    mean = float(d.mean()) if n else math.nan
    if n < 2:
        return PairedTest(mean, math.nan, math.nan, n)
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return PairedTest(mean, 0.0 if mean == 0 else math.copysign(math.inf, mean), 1.0 if mean == 0 else 0.0, n)
    t = mean / (sd / math.sqrt(n))
    return PairedTest(mean, t, min(1.0, 2.0 * t_sf(abs(t), n - 1)), n)


@dataclass
class Comparison:
    algos: tuple
    runs: list
    mean_aggregate: dict
    mean_final: dict
    curves: dict  # algo -> per-iteration mean of mean_return
    paired: list  # per-iteration PairedTest of algos[0] - algos[1]
    aggregate_test: PairedTest
    wins: int
    iters_to_optimal: dict  # algo -> mean over runs where every algo confirmed an optimal policy
    both_optimal_runs: int


def aggregate(summaries, iteration_rows, algos=("de", "spi")) -> Comparison:
    """Paired comparison of two algorithms over matching seeds."""
    by = {a: {s.run: s for s in summaries if s.algo == a} for a in algos}
    runs = sorted(by[algos[0]])
    if any(sorted(by[a]) != runs for a in algos) or not runs:
        raise ValueError("aggregate needs the same nonempty set of runs for every algorithm: "
                         + ", ".join(f"{a}={sorted(by[a])}" for a in algos))
    curves_by_run = {a: {} for a in algos}
    for row in iteration_rows:
        if row["algo"] in curves_by_run:
            curves_by_run[row["algo"]].setdefault(row["run"], {})[row["iter"]] = row["mean_return"]
    iters = sorted({i for a in algos for r in curves_by_run[a].values() for i in r})
    curves = {a: [float(np.mean([curves_by_run[a][r][i] for r in runs])) for i in iters] for a in algos}
    paired = [paired_t_test([curves_by_run[algos[0]][r][i] for r in runs],
                            [curves_by_run[algos[1]][r][i] for r in runs]) for i in iters]
    agg = {a: [by[a][r].aggregate_return for r in runs] for a in algos}
    both = [r for r in runs if all(by[a][r].iters_to_optimal is not None for a in algos)]
    return Comparison(
        algos=tuple(algos),
        runs=runs,
        mean_aggregate={a: float(np.mean(agg[a])) for a in algos},
        mean_final={a: float(np.mean([by[a][r].final_return for r in runs])) for a in algos},
        curves=curves,
        paired=paired,
        aggregate_test=paired_t_test(agg[algos[0]], agg[algos[1]]),
        wins=sum(x > y for x, y in zip(agg[algos[0]], agg[algos[1]])),
        iters_to_optimal={a: float(np.mean([by[a][r].iters_to_optimal for r in both])) if both else math.nan
                          for a in algos},
        both_optimal_runs=len(both),
    )


# -- CSV persistence -------------------------------------------------------------


def iteration_rows(records, run: int, algo: str) -> list[dict]:
    return [dict(run=run, iter=rec.iteration, algo=algo, n_deployed=rec.n_deployed, rho_baseline=rec.rho_baseline,
                 n_confirmed=rec.n_confirmed, mean_return=rec.mean_return, joint_entropy=rec.joint_entropy)
            for rec in records]


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row[k] is None else (repr(row[k]) if isinstance(row[k], float) else row[k]))
                             for k in header})


def _read(path, header, types):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != header:
            raise ValueError(f"{path}: expected columns {','.join(header)}, got {reader.fieldnames}")
        return [{k: (None if v == "" else types[k](v)) for k, v in row.items()} for row in reader]


_ITER_TYPES = dict(run=int, iter=int, algo=str, n_deployed=int, rho_baseline=float, n_confirmed=int,
                   mean_return=float, joint_entropy=float)
_SUMMARY_TYPES = dict(run=int, algo=str, aggregate_return=float, final_return=float, iters_to_optimal=int,
                      unsafe_count=int)
_CONFIRMATION_TYPES = dict(run=int, algo=str, iter=int, policy_id=str, rho_baseline=float, lower_bound=float,
                           true_value=float)


def write_iterations_csv(path, rows):
    _write(path, ITERATION_FIELDS, rows)


def read_iterations_csv(path) -> list[dict]:
    return _read(path, ITERATION_FIELDS, _ITER_TYPES)


def write_summary_csv(path, summaries):
    _write(path, SUMMARY_FIELDS, [asdict(s) for s in summaries])


def read_summary_csv(path) -> list[RunSummary]:
    return [RunSummary(**row) for row in _read(path, SUMMARY_FIELDS, _SUMMARY_TYPES)]


def write_confirmations_csv(path, audit):
    _write(path, CONFIRMATION_FIELDS, [{f.name: getattr(c, f.name) for f in fields(c)} for c in audit])


def read_confirmations_csv(path) -> list[Confirmation]:
    return [Confirmation(**row) for row in _read(path, CONFIRMATION_FIELDS, _CONFIRMATION_TYPES)]
