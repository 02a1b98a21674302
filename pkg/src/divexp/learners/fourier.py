"""Fourier cosine basis over a box-normalised state, and the greedy policy it induces."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from divexp.mdp import SUPPORT_FLOOR, StochasticPolicy


class FourierBasis:
    """phi_c(s) = cos(pi * c . s_norm) for every c in {0..order}^dim."""

    def __init__(self, low, high, order: int = 3):
        self.low = np.asarray(low, dtype=float)
        self.high = np.asarray(high, dtype=float)
        self.order = order
        self.dim = len(self.low)
        self.coefficients = np.array(list(itertools.product(range(order + 1), repeat=self.dim)),
                                     dtype=float)

    @property
    def n_features(self) -> int:
        return len(self.coefficients)

    def normalize(self, states) -> np.ndarray:
        s = np.atleast_2d(np.asarray(states, dtype=float))
        return np.clip((s - self.low) / (self.high - self.low), 0.0, 1.0)

    def features(self, states) -> np.ndarray:
        return np.cos(np.pi * self.normalize(states) @ self.coefficients.T)


@dataclass
class FourierQ:
    basis: FourierBasis
    weights: np.ndarray  # (n_actions, n_features)

    @property
    def n_actions(self) -> int:
        return self.weights.shape[0]

    def values(self, states) -> np.ndarray:
        return self.basis.features(states) @ self.weights.T


class QPolicy(StochasticPolicy):
    """Softened greedy policy: argmax gets 1 - (|A|-1) * floor, every other action gets floor."""

    def __init__(self, q: FourierQ, support_floor: float, policy_id: str):
        self.q = q
        self.support_floor = support_floor
        self.n_actions = q.n_actions
        self.policy_id = policy_id

    def distributions(self, states) -> np.ndarray:
        greedy = np.argmax(self.q.values(np.stack([np.asarray(s, dtype=float) for s in states])), axis=1)
        probs = np.full((len(greedy), self.n_actions), self.support_floor)
        probs[np.arange(len(greedy)), greedy] = 1.0 - (self.n_actions - 1) * self.support_floor
        return probs

    def action_distribution(self, state) -> np.ndarray:
        return self.distributions([state])[0]


def policy_from_q(q: FourierQ, support_floor: float = SUPPORT_FLOOR, policy_id: str = "q") -> QPolicy:
    if not 0.0 < support_floor < 1.0 / q.n_actions:
        raise ValueError("support_floor must lie in (0, 1/|A|)")
    return QPolicy(q, support_floor, policy_id)
