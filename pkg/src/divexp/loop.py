"""Iterative deployment of certified policy sets (DE), with SPI as the r = 1 case."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from divexp.config import ExperimentConfig
from divexp.envs import Acrobot, GridWorldPlus, MountainCar
from divexp.envs.gridworld import gridworld_spec
from divexp.learners import EsLearner, ESConfig, FQIConfig, FqiLearner
from divexp.learners.candidates import gen_candidate_policies
from divexp.mdp import (MDPSpec, StochasticPolicy, check_full_support, generate_trajectory,
                        normalized_return, uniform_policy)
from divexp.ope import SafetyTestReport, safety_test, t_lower_bound
from divexp.theory import joint_entropy

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AllocationVector:
    k: tuple

    def __post_init__(self):
        if any(x < 0 for x in self.k):
            raise ValueError("allocation entries must be nonnegative")

    @property
    def n(self) -> int:
        return sum(self.k)


def allocate(n: int, m: int) -> AllocationVector:
    """Equal split of n trajectories over m policies; the remainder goes to the lowest indices."""
    if m < 1 or m > n:
        raise ValueError(f"cannot allocate {n} trajectories over {m} policies")
    q, rem = divmod(n, m)
    return AllocationVector(tuple(q + 1 if i < rem else q for i in range(m)))


def compute_rho_baseline(test_trajs, delta: float, spec: MDPSpec) -> float:
    """t-test lower bound on the plain normalized returns of the accumulated test set."""
    if len(test_trajs) < 2:
        raise ValueError("need at least 2 test trajectories for the baseline")
    return t_lower_bound([normalized_return(t, spec) for t in test_trajs], delta)


class UniformPolicy(StochasticPolicy):
    """Uniform random policy over any state space."""

    def __init__(self, n_actions: int, policy_id: str = "pi0"):
        self.n_actions = n_actions
        self.policy_id = policy_id

    def action_distribution(self, state) -> np.ndarray:
        return np.full(self.n_actions, 1.0 / self.n_actions)

    def distributions(self, states) -> np.ndarray:
        return np.full((len(states), self.n_actions), 1.0 / self.n_actions)


@dataclass
class IterationRecord:
    iteration: int
    deployed: list
    counts: list
    rho_baseline: float
    candidate_ids: list
    lower_bounds: dict
    p_values: dict
    confirmed: list
    mean_return: float
    joint_entropy: float
    batch_entropy: float = 0.0
    n_train: int = 0
    n_test: int = 0
    # in-memory only: the policy objects behind the ids above
    candidates: list = field(default_factory=list, repr=False)
    train_ids: frozenset = field(default_factory=frozenset, repr=False)
    test_ids: frozenset = field(default_factory=frozenset, repr=False)
    collected: list = field(default_factory=list, repr=False)

    @property
    def n_deployed(self) -> int:
        return len(self.deployed)

    @property
    def n_confirmed(self) -> int:
        return len(self.confirmed)


def make_domain(cfg: ExperimentConfig):
    """Environment, MDP spec and starting policy for the configured domain."""
    if cfg.domain == "gridworld":
        env = GridWorldPlus(gridworld_spec(cfg.gamma))
        return env, env.spec, uniform_policy(env.n_states, env.n_actions, "pi0")
    env = MountainCar() if cfg.domain == "mountaincar" else Acrobot()
    return env, env.spec, UniformPolicy(env.n_actions, "pi0")


class ExperimentState:
    """Everything one run carries across iterations."""

    def __init__(self, cfg: ExperimentConfig, algo: str = "de"):
        self.cfg = cfg
        self.algo = algo
        self.env, self.spec, self.pi0 = make_domain(cfg)
        root = np.random.SeedSequence(cfg.seed)
        collect_seq, learn_seq = root.spawn(2)
        self.collect_rng = np.random.default_rng(collect_seq)
        self.learn_rng = np.random.default_rng(learn_seq)
        self.behaviors = {self.pi0.policy_id: self.pi0}
        # certified lower bound per deployable policy; pi0 is deployable by fiat
        self.certified = {self.pi0.policy_id: -math.inf}
        self.next_traj_id = 0
        if cfg.domain == "gridworld":
            self.learner = EsLearner(self.behaviors, self.spec,
                                     ESConfig(cfg.es_population, cfg.es_generations, cfg.es_step,
                                              temperature=cfg.es_temperature, objective=cfg.es_objective,
                                              delta=cfg.delta),
                                     cfg.alpha, cfg.support_floor)
        else:
            self.learner = FqiLearner(FQIConfig(cfg.fqi_iterations, cfg.fqi_gamma, cfg.fqi_ridge, cfg.fqi_order),
                                      self.env.state_low, self.env.state_high, self.env.n_actions,
                                      cfg.support_floor)

    def mixing_base(self, deployed) -> StochasticPolicy:
        return max(deployed, key=lambda p: self.certified[p.policy_id])


def run_iteration(deployed, train, test, cfg: ExperimentConfig, state: ExperimentState, j: int):
    """One improvement iteration; returns (record, deployed', train', test')."""
    if not deployed:
        raise ValueError("deployed policy set is empty")
    alloc = allocate(cfg.n, len(deployed))
    collected = []
    new_train, new_test = list(train), list(test)
    for policy, k in zip(deployed, alloc.k):
        batch = []
        for _ in range(k):
            batch.append(generate_trajectory(state.env, policy, state.collect_rng, state.spec,
                                             traj_id=state.next_traj_id, iteration=j))
            state.next_traj_id += 1
        n_train = math.floor(k * cfg.split)
        new_train.extend(batch[:n_train])
        new_test.extend(batch[n_train:])
        collected.extend(batch)

    rho = compute_rho_baseline(new_test, cfg.delta, state.spec)
    incumbent = state.mixing_base(deployed)
    base = state.pi0 if cfg.mix_base == "initial" else incumbent
    # warm start from what the incumbent was trained to do, not from its mixture
    start = getattr(incumbent, "target", incumbent)
    state.learner.test_size = len(new_test)
    candidates = gen_candidate_policies(new_train, cfg.r, state.learner, state.learn_rng, base, cfg.alpha,
                                        prefix=f"i{j}c", start=start)
    if cfg.domain == "gridworld":
        for cand in candidates:
            check_full_support(cand, range(state.env.n_states), cfg.support_floor)
    report: SafetyTestReport = safety_test(candidates, new_test, state.behaviors, state.spec, cfg.delta, rho)

    by_id = {c.policy_id: c for c in candidates}
    if report.confirmed:
        next_deployed = [by_id[i] for i in report.confirmed]
        for pid in report.confirmed:
            state.behaviors[pid] = by_id[pid]
            state.certified[pid] = report.lower_bounds[pid]
    else:
        next_deployed = list(deployed)

    returns = [normalized_return(t, state.spec) for t in collected]
    record = IterationRecord(
        iteration=j,
        deployed=[p.policy_id for p in deployed],
        counts=list(alloc.k),
        rho_baseline=rho,
        candidate_ids=report.candidate_ids,
        lower_bounds=report.lower_bounds,
        p_values=report.p_values,
        confirmed=report.confirmed,
        mean_return=float(np.mean(returns)),
        joint_entropy=joint_entropy(new_train + new_test),
        batch_entropy=joint_entropy(collected),
        n_train=len(new_train),
        n_test=len(new_test),
        candidates=candidates,
        train_ids=frozenset(t.traj_id for t in new_train),
        test_ids=frozenset(t.traj_id for t in new_test),
        collected=collected,
    )
    log.debug("iter %d: deployed=%d rho=%.4f confirmed=%s mean=%.4f", j, len(deployed), rho,
              report.confirmed, record.mean_return)
    return record, next_deployed, new_train, new_test


def run_experiment(cfg: ExperimentConfig, algo: str = "de") -> list[IterationRecord]:
    """Run ``cfg.d`` iterations from the uniform starting policy."""
    if algo == "spi":
        cfg = cfg.replace(r=1)
    elif algo != "de":
        raise ValueError(f"unknown algo {algo!r}")
    state = ExperimentState(cfg, algo)
    deployed = [state.pi0]
    train, test = [], []
    records = []
    for j in range(1, cfg.d + 1):
        try:
            record, deployed, train, test = run_iteration(deployed, train, test, cfg, state, j)
        except Exception as exc:
            raise RuntimeError(f"run seed={cfg.seed} algo={algo} failed at iteration {j}: {exc}") from exc
        records.append(record)
    return records


def run_spi_baseline(cfg: ExperimentConfig) -> list[IterationRecord]:
    return run_experiment(cfg, algo="spi")
