"""Monte Carlo checks of the off-policy evaluation machinery."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from divexp.envs.gridworld import GridWorldPlus, N_ACTIONS, N_STATES
from divexp.mdp import TabularPolicy, generate_trajectory, mix_policies, uniform_policy
from divexp.ope import bh_select, iw_returns, t_p_value
from divexp.stats import t_ppf
from divexp.theory import compositions, lemma1_bound, random_profile, verify_theorem1, verify_theorem2


@dataclass
class UnbiasednessResult:
    mean: float
    std_error: float
    exact: float
    n_samples: int

    @property
    def z(self) -> float:
        return (self.mean - self.exact) / self.std_error

    @property
    def passed(self) -> bool:
        return abs(self.z) <= 3.0


def reference_policy_pair(seed: int = 7):
    """Fixed target/behavior pair of mixed grid-world policies."""
    rng = np.random.default_rng(seed)
    uniform = uniform_policy(N_STATES, N_ACTIONS, "pi0")
    behavior = mix_policies(uniform, TabularPolicy(rng.dirichlet(np.ones(N_ACTIONS), N_STATES), "b-target"),
                            0.5, policy_id="behavior")
    target = mix_policies(behavior, TabularPolicy(rng.dirichlet(np.ones(N_ACTIONS), N_STATES), "t-target"),
                          0.7, policy_id="target")
    return target, behavior


def is_unbiasedness(n_samples: int = 50_000, seed: int = 0, env: GridWorldPlus | None = None) -> UnbiasednessResult:
    """Mean importance weighted return of the reference target versus its exact value."""
    env = env or GridWorldPlus()
    target, behavior = reference_policy_pair()
    rng = np.random.default_rng(seed)
    trajs = [generate_trajectory(env, behavior, rng, env.spec, traj_id=i) for i in range(n_samples)]
    values = np.array([x.value for x in iw_returns(trajs, target, {behavior.policy_id: behavior}, env.spec)])
    return UnbiasednessResult(float(values.mean()), float(values.std(ddof=1) / math.sqrt(n_samples)),
                              env.exact_value(target.table), n_samples)


def t_bound_violation_rate(trials: int = 10_000, n: int = 32, delta: float = 0.05, a: float = 2.0,
                           b: float = 5.0, seed: int = 0) -> float:
    """Fraction of trials whose t lower bound exceeds the true mean of Beta(a, b) returns."""
    rng = np.random.default_rng(seed)
    x = rng.beta(a, b, size=(trials, n))
    bounds = x.mean(axis=1) - t_ppf(1.0 - delta, n - 1) * x.std(axis=1, ddof=1) / math.sqrt(n)
    return float(np.mean(bounds > a / (a + b)))


def bh_false_discovery(trials: int = 10_000, n_null: int = 5, n_alt: int = 5, n: int = 32,
                       effect: float = 0.6, delta: float = 0.05, seed: int = 0) -> float:
    """Mean false discovery proportion of BH over one-sided t-tests with known nulls.

    Null candidates have true mean exactly at the threshold (the least favourable
    null); the others sit ``effect`` standard deviations above it.
    """
    rng = np.random.default_rng(seed)
    shifts = np.r_[np.zeros(n_null), np.full(n_alt, effect)]
    fdp = np.empty(trials)
    for i in range(trials):
        samples = rng.standard_normal((len(shifts), n)) + shifts[:, None]
        pvals = [(j, t_p_value(samples[j], 0.0)) for j in range(len(shifts))]
        rejected = bh_select(pvals, delta)
        false = sum(1 for j in rejected if j < n_null)
        fdp[i] = false / len(rejected) if rejected else 0.0
    return float(fdp.mean())


# -- allocation theory ------------------------------------------------------------


def lemma1_check(n_max: int = 12, m_max: int = 4) -> tuple[int, int]:
    """(instances checked, mismatches) of the closed-form distance bound against brute force."""
    instances = mismatches = 0
    for m in range(1, m_max + 1):
        for n in range(1, n_max + 1):
            comps = np.array(list(compositions(n, m)))
            for k in comps:
                brute = int(np.abs(comps - k).sum(axis=1).max())
                instances += 1
                mismatches += brute != lemma1_bound(k)
    return instances, mismatches


def theorem1_check(trials: int = 1000, n: int = 6, ms=(2, 3), r: int = 3, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    return {m: verify_theorem1([random_profile(rng, r, m) for _ in range(trials)], n, m) for m in ms}


def theorem2_check(trials: int = 1000, n: int = 12, m: int = 3, r: int = 4, seed: int = 0) -> float:
    """Largest |difference| between the equal-allocation and single-sampling average variances."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        de, spi = verify_theorem2(random_profile(rng, r, m), n, m)
        worst = max(worst, abs(de - spi))
    return worst
