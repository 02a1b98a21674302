"""Elitist evolution strategy over tabular softmax policies.

The objective is the mean importance weighted return on the training
trajectories, optionally of the alpha-mixture that will actually be deployed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from divexp.stats import t_ppf
from divexp.mdp import SUPPORT_FLOOR, MDPSpec, StochasticPolicy, TabularPolicy, normalized_return


@dataclass(frozen=True)
class ESConfig:
    population: int = 20
    generations: int = 30
    step_size: float = 0.5
    elite: int = 5
    temperature: float = 1.0
    objective: str = "mean"  # "mean" or "bound"
    delta: float = 0.05
    # the bound objective widens the predicted interval by this factor to resist overfitting
    bound_inflation: float = 2.0


@dataclass
class TabularSoftmaxParams:
    preferences: np.ndarray  # (n_states, n_actions)
    temperature: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


def softmax_table(prefs, temperature=1.0, floor=SUPPORT_FLOOR) -> np.ndarray:
    """Row softmax lifted so every action keeps at least ``floor`` probability."""
    z = np.asarray(prefs, dtype=float) / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=-1, keepdims=True)
    n_actions = p.shape[-1]
    return floor + (1.0 - n_actions * floor) * p


class SoftmaxPolicy(TabularPolicy):
    def __init__(self, params: TabularSoftmaxParams, policy_id: str, floor=SUPPORT_FLOOR, lineage=""):
        super().__init__(softmax_table(params.preferences, params.temperature, floor), policy_id, lineage)
        self.params = params


class _TrainingData:
    """Sufficient statistics of a trajectory set for tabular importance sampling."""

    def __init__(self, trajs, behaviors, spec: MDPSpec, n_states: int, n_actions: int):
        self.counts = np.zeros((len(trajs), n_states * n_actions))
        self.log_behavior = np.zeros(len(trajs))
        self.returns = np.zeros(len(trajs))
        for i, traj in enumerate(trajs):
            states = np.asarray(traj.states, dtype=np.int64)
            actions = traj.actions
            np.add.at(self.counts[i], states * n_actions + actions, 1.0)
            probs = behaviors[traj.behavior_id].distributions(states)[np.arange(len(traj)), actions]
            self.log_behavior[i] = np.sum(np.log(probs))
            self.returns[i] = normalized_return(traj, spec)

    def weighted(self, tables: np.ndarray) -> np.ndarray:
        """Importance weighted returns, one column per policy table in ``tables`` (P, S, A)."""
        logp = np.log(tables.reshape(len(tables), -1))
        log_w = self.counts @ logp.T - self.log_behavior[:, None]
        return self.returns[:, None] * np.exp(log_w)

    def objective(self, tables: np.ndarray) -> np.ndarray:
        """Mean importance weighted return for each policy table."""
        return np.mean(self.weighted(tables), axis=0)

    def predicted_bound(self, tables: np.ndarray, n_test: int, delta: float, inflation: float = 1.0) -> np.ndarray:
        """Student-t lower bound the weighted returns would give on ``n_test`` fresh samples."""
        x = self.weighted(tables)
        if len(x) < 2:
            return x.mean(axis=0)
        sd = x.std(axis=0, ddof=1)
        return x.mean(axis=0) - inflation * t_ppf(1.0 - delta, n_test - 1) * sd / np.sqrt(n_test)


def is_objective(policy: StochasticPolicy, trajs, behaviors, spec: MDPSpec) -> float:
    """Mean importance weighted return of ``policy`` over ``trajs`` (tabular policies only)."""
    table = policy.table
    data = _TrainingData(trajs, behaviors, spec, *table.shape)
    return float(data.objective(table[None])[0])


@dataclass
class SearchResult:
    params: TabularSoftmaxParams
    fitness: float
    trace: list = field(default_factory=list)


def es_policy_search(trajs, reference: StochasticPolicy, behaviors, spec: MDPSpec, config: ESConfig,
                     rng: np.random.Generator, base_table=None, alpha: float = 0.0,
                     init_params=(), floor: float = SUPPORT_FLOOR, test_size: int = 0) -> SearchResult:
    """(mu + lambda) search maximising the importance sampled objective.

    The search starts from the log-probabilities of ``reference``. When
    ``base_table`` is given, fitness is that of the mixture
    ``(1 - alpha) * softmax(theta) + alpha * base``. With ``config.objective ==
    "bound"`` the fitness is the t lower bound predicted for ``test_size`` samples.
    """
    if config.objective not in ("mean", "bound"):
        raise ValueError(f"unknown objective {config.objective!r}")
    if config.objective == "bound" and test_size < 2:
        raise ValueError("the bound objective needs test_size >= 2")
    if not trajs:
        raise ValueError("policy search needs at least one trajectory")
    n_states, n_actions = reference.table.shape
    data = _TrainingData(trajs, behaviors, spec, n_states, n_actions)

    def fitness(thetas):
        tables = softmax_table(thetas, config.temperature, floor)
        if base_table is not None:
            tables = (1.0 - alpha) * tables + alpha * base_table[None]
        if config.objective == "bound":
            return data.predicted_bound(tables, test_size, config.delta, config.bound_inflation)
        return data.objective(tables)

    start = config.temperature * np.log(reference.table)
    parents = np.stack([start] + [np.asarray(p.preferences, float) for p in init_params])
    scores = fitness(parents)
    trace = [float(scores.max())]
    # preferences at states absent from the data cannot move the fitness; leave them alone
    visited = (data.counts.reshape(len(data.counts), n_states, n_actions).sum(axis=(0, 2)) > 0)
    mask = np.repeat(visited[:, None], n_actions, axis=1)
    mu = min(config.elite, config.population)
    for _ in range(config.generations):
        picks = rng.integers(0, len(parents), size=config.population)
        noise = rng.standard_normal((config.population, n_states, n_actions))
        children = parents[picks] + config.step_size * noise * mask
        pool = np.concatenate([parents, children])
        pool_scores = np.concatenate([scores, fitness(children)])
        # stable sort keeps earlier (older) members first on ties
        keep = np.argsort(-pool_scores, kind="stable")[:mu]
        parents, scores = pool[keep], pool_scores[keep]
        trace.append(float(scores[0]))
    return SearchResult(TabularSoftmaxParams(parents[0], config.temperature), float(scores[0]), trace)


class EsLearner:
    """Learner adapter for the tabular domains: searches the mixture that will be deployed."""

    def __init__(self, behaviors, spec: MDPSpec, config: ESConfig, alpha: float,
                 floor: float = SUPPORT_FLOOR):
        self.behaviors = behaviors
        self.spec = spec
        self.config = config
        self.alpha = alpha
        self.floor = floor
        self.test_size = 0  # size of the set the safety test will use; set by the caller

    def learn(self, trajs, base, rng, policy_id: str, start=None):
        """Search from ``start`` (default ``base``) for the best mixture with ``base``."""
        result = es_policy_search(trajs, start if start is not None else base, self.behaviors, self.spec, self.config, rng,
                                  base_table=base.table, alpha=self.alpha, floor=self.floor,
                                  test_size=self.test_size)
        return SoftmaxPolicy(result.params, policy_id, self.floor)
