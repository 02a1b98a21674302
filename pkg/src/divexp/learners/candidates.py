"""Candidate set generation: one policy on all training data, the rest on stratified bootstraps."""
from __future__ import annotations

import numpy as np

from divexp.mdp import mix_policies


def bootstrap_per_iteration(trajs, rng: np.random.Generator) -> list:
    """Resample with replacement inside each collection-iteration group, keeping group sizes."""
    groups: dict = {}
    for traj in trajs:
        groups.setdefault(traj.iteration, []).append(traj)
    out = []
    for it in sorted(groups):
        group = groups[it]
        if not group:
            raise ValueError(f"empty trajectory group for iteration {it}")
        out.extend(group[i] for i in rng.integers(0, len(group), size=len(group)))
    return out


def gen_candidate_policies(train, r: int, learner, rng: np.random.Generator, base, alpha: float,
                           prefix: str = "c", start=None) -> list:
    """r candidates, each mixed with ``base`` at ``alpha``; the first sees the full training set.

    ``start`` is an optional warm start handed to the learner.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    candidates = []
    for i, child in enumerate(rng.spawn(r), start=1):
        data = train if i == 1 else bootstrap_per_iteration(train, child)
        target = learner.learn(data, base, child, f"{prefix}{i}-target", start=start)
        cand = mix_policies(base, target, alpha, policy_id=f"{prefix}{i}")
        cand.lineage = f"base={base.policy_id};data={'full' if i == 1 else 'bootstrap'}"
        candidates.append(cand)
    return candidates
