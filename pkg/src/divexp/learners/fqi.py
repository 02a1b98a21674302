"""Fitted Q-iteration with a per-action linear model on Fourier features."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from divexp.learners.fourier import FourierBasis, FourierQ, policy_from_q
from divexp.mdp import SUPPORT_FLOOR


@dataclass(frozen=True)
class FQIConfig:
    iterations: int = 60
    gamma: float = 1.0
    regularization: float = 1e-6
    order: int = 3


def _stack_transitions(trajs):
    states, actions, rewards, nexts, terminal = [], [], [], [], []
    for traj in trajs:
        for tr in traj.transitions:
            states.append(np.atleast_1d(np.asarray(tr.state, dtype=float)))
            actions.append(tr.action)
            rewards.append(tr.reward)
            nexts.append(np.atleast_1d(np.asarray(tr.next_state, dtype=float)))
            terminal.append(tr.terminal)
    return (np.stack(states), np.array(actions), np.array(rewards), np.stack(nexts),
            np.array(terminal, dtype=bool))


def fit_sweep(phi, actions, targets, n_actions, ridge, weights=None) -> np.ndarray:
    """Per-action ridge regression of ``targets`` on ``phi``; actions without data keep their weights."""
    k = phi.shape[1]
    out = np.zeros((n_actions, k)) if weights is None else weights.copy()
    for a in range(n_actions):
        mask = actions == a
        if not mask.any():
            continue
        x = phi[mask]
        out[a] = np.linalg.solve(x.T @ x + ridge * np.eye(k), x.T @ targets[mask])
    return out


def fqi_learn(trajs, config: FQIConfig, low, high, n_actions: int) -> FourierQ:
    if not trajs:
        raise ValueError("FQI needs at least one trajectory")
    basis = FourierBasis(low, high, config.order)
    s, a, r, s2, term = _stack_transitions(trajs)
    phi = basis.features(s)
    phi_next = basis.features(s2)
    weights = np.zeros((n_actions, basis.n_features))
    for _ in range(config.iterations):
        future = np.where(term, 0.0, (phi_next @ weights.T).max(axis=1))
        weights = fit_sweep(phi, a, r + config.gamma * future, n_actions, config.regularization, weights)
    return FourierQ(basis, weights)


class FqiLearner:
    """Learner adapter: FQI then a softened greedy policy."""

    def __init__(self, config: FQIConfig, low, high, n_actions: int, support_floor: float = SUPPORT_FLOOR):
        self.config = config
        self.low, self.high = low, high
        self.n_actions = n_actions
        self.support_floor = support_floor

    def learn(self, trajs, base, rng, policy_id: str, start=None):
        q = fqi_learn(trajs, self.config, self.low, self.high, self.n_actions)
        return policy_from_q(q, self.support_floor, policy_id)
