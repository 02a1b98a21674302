"""High-confidence off-policy evaluation.

Importance weighted returns, one-sided Student-t lower bounds and p-values,
and Benjamini-Hochberg selection over a set of candidate policies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from divexp.mdp import MDPSpec, StochasticPolicy, Trajectory, normalized_return
from divexp.stats import t_ppf, t_sf


@dataclass(frozen=True)
class ImportanceWeightedReturn:
    value: float
    target_id: str
    behavior_id: str
    traj_id: int


@dataclass
class SafetyTestReport:
    candidate_ids: list
    lower_bounds: dict
    p_values: dict
    confirmed: list
    rho_baseline: float
    delta: float
    means: dict = field(default_factory=dict)


def log_likelihood(traj: Trajectory, policy: StochasticPolicy) -> float:
    """Sum of log pi(a_t | s_t) along the trajectory; ``-inf`` if any action has zero probability."""
    probs = policy.distributions(traj.states)
    chosen = probs[np.arange(len(traj)), traj.actions]
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(chosen)))


def importance_weight(traj: Trajectory, target: StochasticPolicy, behavior: StochasticPolicy) -> float:
    """prod_t target(a_t|s_t) / behavior(a_t|s_t), accumulated in log space."""
    states = traj.states
    actions = traj.actions
    steps = np.arange(len(traj))
    q = behavior.distributions(states)[steps, actions]
    if np.any(q <= 0):
        t = int(np.flatnonzero(q <= 0)[0])
        raise ValueError(f"behavior policy {behavior.policy_id} gives zero probability to "
                         f"action {actions[t]} in state {states[t]!r}")
    p = target.distributions(states)[steps, actions]
    if np.any(p == 0):
        return 0.0
    return float(np.exp(np.sum(np.log(p)) - np.sum(np.log(q))))


def iw_returns(trajs: Sequence[Trajectory], target: StochasticPolicy,
               behaviors: Mapping[str, StochasticPolicy], spec: MDPSpec) -> list[ImportanceWeightedReturn]:
    """One importance weighted return per trajectory, each against its own behavior policy."""
    out = []
    for traj in trajs:
        try:
            behavior = behaviors[traj.behavior_id]
        except KeyError:
            raise KeyError(f"unknown behavior policy id {traj.behavior_id!r}") from None
        w = importance_weight(traj, target, behavior)
        out.append(ImportanceWeightedReturn(normalized_return(traj, spec) * w, target.policy_id,
                                            traj.behavior_id, traj.traj_id))
    return out


def _mean_std(samples) -> tuple[np.ndarray, float, float]:
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("need at least 2 samples")
    return x, float(x.mean()), float(x.std(ddof=1))


def t_lower_bound(samples, delta: float) -> float:
    """1 - delta confidence lower bound on the mean from a one-sided t-test."""
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 0.5), got {delta}")
    x, mean, std = _mean_std(samples)
    if std == 0.0 or np.all(x == x[0]):
        return mean
    return mean - t_ppf(1.0 - delta, len(x) - 1) * std / math.sqrt(len(x))


def t_p_value(samples, rho: float) -> float:
    """One-sided p-value for H0: mean <= rho against H1: mean > rho."""
    x, mean, std = _mean_std(samples)
    if std == 0.0:
        # degenerate sample: the null is rejected exactly when the common value clears rho
        return 0.0 if mean > rho else 1.0
    return t_sf((mean - rho) / (std / math.sqrt(len(x))), len(x) - 1)


def bh_select(p_values, delta: float) -> set:
    """Benjamini-Hochberg step-up rule; ``p_values`` is a sequence of (id, p)."""
    items = sorted(p_values, key=lambda kv: kv[1])
    r = len(items)
    cut = 0
    for i, (_, p) in enumerate(items, start=1):
        if p <= i * delta / r:
            cut = i
    return {key for key, _ in items[:cut]}


def safety_test(candidates: Sequence[StochasticPolicy], test_trajs: Sequence[Trajectory],
                behaviors: Mapping[str, StochasticPolicy], spec: MDPSpec, delta: float,
                rho_baseline: float) -> SafetyTestReport:
    if not test_trajs:
        raise ValueError("safety test needs a nonempty test set")
    lower, pvals, means = {}, {}, {}
    for cand in candidates:
        values = [x.value for x in iw_returns(test_trajs, cand, behaviors, spec)]
        lower[cand.policy_id] = t_lower_bound(values, delta)
        pvals[cand.policy_id] = t_p_value(values, rho_baseline)
        means[cand.policy_id] = float(np.mean(values))
    ids = [c.policy_id for c in candidates]
    passed = bh_select([(i, pvals[i]) for i in ids], delta)
    return SafetyTestReport(ids, lower, pvals, [i for i in ids if i in passed], rho_baseline, delta, means)
