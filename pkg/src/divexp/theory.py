"""Variance-uniformity analysis of single vs. multiple importance sampling.

Everything here is exact arithmetic over finite supports and small integer
allocations, so each statement about allocations can be checked by
enumeration.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class DensityPair:
    """Targets p (r, K), proposals q (m, K) and payoff f (K,) on a common finite support."""

    targets: np.ndarray
    proposals: np.ndarray
    payoff: np.ndarray

    def __post_init__(self):
        for name in ("targets", "proposals"):
            arr = getattr(self, name)
            if np.any(arr < 0) or np.any(np.abs(arr.sum(axis=1) - 1.0) > 1e-12):
                raise ValueError(f"{name}: rows must be probability vectors")
        need = (self.targets * self.payoff != 0).any(axis=0)
        if np.any(self.proposals[:, need] <= 0):
            raise ValueError("proposals must be positive wherever p_j * f is nonzero")


def variance_profile(pair: DensityPair) -> np.ndarray:
    """V[j, t] = var_q_t(p_j f / q_t), in closed form."""
    p, q, f = pair.targets, pair.proposals, pair.payoff
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q[None] > 0, p[:, None] * f / q[None], 0.0)  # (r, m, K)
    mean = np.sum(q[None] * ratio, axis=2)
    second = np.sum(q[None] * ratio ** 2, axis=2)
    return np.maximum(second - mean ** 2, 0.0)


def sampled_variance_profile(pair: DensityPair, draws: int, rng) -> np.ndarray:
    """Monte Carlo estimate of :func:`variance_profile`."""
    p, q, f = pair.targets, pair.proposals, pair.payoff
    out = np.empty((len(p), len(q)))
    for t in range(len(q)):
        x = rng.choice(len(f), size=draws, p=q[t])
        vals = p[:, x] * f[x] / q[t, x]
        out[:, t] = vals.var(axis=1, ddof=1)
    return out


def single_is_variance(V, j: int, t: int, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(V[j][t]) / n


def multi_is_variance(V, j: int, k, n: int) -> float:
    """(1/n^2) sum_t k_t V[j, t]."""
    k = np.asarray(k)
    row = np.asarray(V[j], dtype=float)
    if row.shape != k.shape:
        raise ValueError(f"allocation has {len(k)} entries but the profile has {len(row)} proposals")
    if k.sum() != n:
        raise ValueError("allocation must sum to n")
    return float(np.dot(k, row)) / n ** 2


def allocation_variances(V, k, n: int) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    return np.array([multi_is_variance(V, j, k, n) for j in range(len(V))])


def uniformity_objective(V, k, n: int) -> float:
    """Mean absolute deviation of the per-target estimator variances."""
    v = allocation_variances(V, k, n)
    return float(np.mean(np.abs(v - v.mean())))


def compositions(n: int, m: int):
    """All tuples of m nonnegative integers summing to n."""
    if m == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, m - 1):
            yield (first,) + rest


def lemma1_bound(k) -> int:
    """Largest L1 distance from allocation k to any allocation of the same total."""
    k = np.asarray(k)
    return int(2 * k.sum() - 2 * k.min())


def max_l1_distance(k) -> int:
    """Brute-force counterpart of :func:`lemma1_bound`."""
    k = np.asarray(k)
    return max(int(np.abs(np.asarray(y) - k).sum()) for y in compositions(int(k.sum()), len(k)))


def de_allocation(n: int, m: int) -> np.ndarray:
    if n % m:
        raise ValueError("m must divide n for the equal allocation")
    return np.full(m, n // m)


def single_allocation(n: int, m: int, t: int) -> np.ndarray:
    k = np.zeros(m, dtype=int)
    k[t] = n
    return k


def optimal_allocations(V, n: int, m: int, tol: float = 1e-12) -> list:
    """Every integer allocation minimising :func:`uniformity_objective` (within ``tol``)."""
    scored = [(uniformity_objective(V, k, n), k) for k in compositions(n, m)]
    best = min(s for s, _ in scored)
    return [np.array(k) for s, k in scored if s <= best + tol]


@dataclass
class Theorem1Report:
    profiles: int
    checks: int
    violations: int
    expectation_mismatches: int

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.expectation_mismatches == 0


def expected_single_distance(k_star, n: int, m: int) -> Fraction:
    total = sum(int(np.abs(single_allocation(n, m, t) - k_star).sum()) for t in range(m))
    return Fraction(total, m)


def verify_theorem1(profiles, n: int, m: int) -> Theorem1Report:
    """Equal allocation is no farther from any optimum than single sampling is on average."""
    k_de = de_allocation(n, m)
    closed_form = Fraction(2 * n) - Fraction(2 * n, m)
    checks = violations = mismatches = 0
    for V in profiles:
        for k_star in optimal_allocations(V, n, m):
            checks += 1
            expected = expected_single_distance(k_star, n, m)
            if expected != closed_form:
                mismatches += 1
            if not 0 <= int(np.abs(k_de - k_star).sum()) <= expected:
                violations += 1
    return Theorem1Report(len(profiles), checks, violations, mismatches)


def verify_theorem2(V, n: int, m: int) -> tuple[float, float]:
    """(average variance under equal allocation, expected average variance under single sampling)."""
    V = np.asarray(V, dtype=float)
    de = float(np.mean(allocation_variances(V, de_allocation(n, m), n)))
    spi = float(np.mean([np.mean(allocation_variances(V, single_allocation(n, m, t), n))
                         for t in range(m)]))
    return de, spi


def random_profile(rng, r: int, m: int, support: int = 6) -> np.ndarray:
    """Variance profile of random finite-support densities with a positive payoff."""
    pair = DensityPair(rng.dirichlet(np.ones(support), size=r),
                       rng.dirichlet(np.ones(support), size=m),
                       rng.uniform(0.1, 1.0, size=support))
    return variance_profile(pair)


def joint_entropy(trajs) -> float:
    """Shannon entropy (nats) of the empirical state-action visit distribution."""
    counts = Counter()
    for traj in trajs:
        for tr in traj.transitions:
            s = tr.state
            key = tuple(np.ravel(s)) if isinstance(s, np.ndarray) else s
            counts[(key, tr.action)] += 1
    if not counts:
        raise ValueError("joint entropy of an empty trajectory set")
    freq = np.array(list(counts.values()), dtype=float)
    p = freq / freq.sum()
    return float(-np.sum(p * np.log(p)))


def diversity_histogram(quality_cap: int, qualities=None) -> dict:
    """Per extra-steps bucket up to ``quality_cap``: policy count and pairwise-diversity counts."""
    from divexp.envs.gridworld import FAMILY_SIZE, decode_index, family_quality
    if qualities is None:
        qualities = family_quality(np.arange(FAMILY_SIZE))
    out = {}
    for q in range(int(quality_cap) + 1):
        members = np.flatnonzero(qualities == q)
        digits = decode_index(members)
        hist = np.zeros(10, dtype=np.int64)
        for i in range(len(digits) - 1):
            d = np.sum(digits[i + 1:] != digits[i], axis=1)
            hist += np.bincount(d, minlength=10)
        out[q] = {"count": len(members), "diversity": hist}
    return out
