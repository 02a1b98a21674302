"""MDP bookkeeping shared by every other module: specs, trajectories, policies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

SUPPORT_FLOOR = 1e-6
CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class MDPSpec:
    gamma: float
    horizon: int
    return_lower: float
    return_upper: float

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not self.return_upper > self.return_lower:
            raise ValueError("return_upper must exceed return_lower")


@dataclass(frozen=True)
class Transition:
    state: Hashable
    action: int
    reward: float
    next_state: Hashable
    terminal: bool

    def __post_init__(self):
        if not math.isfinite(self.reward):
            raise ValueError("reward must be finite")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Ordered transitions plus the id of the policy that generated them.

    ``traj_id`` is unique within a run; ``iteration`` tags the collection
    iteration (used by the stratified bootstrap).
    """

    transitions: tuple
    behavior_id: str
    traj_id: int = 0
    iteration: int = 0

    def __post_init__(self):
        if len(self.transitions) < 1:
            raise ValueError("trajectory must contain at least one transition")
        for prev, cur in zip(self.transitions, self.transitions[1:]):
            if not _same_state(prev.next_state, cur.state):
                raise ValueError("transitions do not chain: next_state != following state")

    def __len__(self):
        return len(self.transitions)

    @property
    def states(self) -> list:
        return [t.state for t in self.transitions]

    @property
    def actions(self) -> np.ndarray:
        return np.fromiter((t.action for t in self.transitions), dtype=np.int64,
                           count=len(self.transitions))

    @property
    def rewards(self) -> np.ndarray:
        return np.fromiter((t.reward for t in self.transitions), dtype=float,
                           count=len(self.transitions))


def _same_state(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return bool(np.array_equal(a, b))
    return a == b


class StochasticPolicy:
    """State -> probability vector over a fixed, finite action set.

    Subclasses implement ``action_distribution``; ``distributions`` is the
    batched form and may be overridden with a vectorised version.
    """

    n_actions: int
    policy_id: str

    def action_distribution(self, state) -> np.ndarray:
        raise NotImplementedError

    def distributions(self, states: Sequence) -> np.ndarray:
        return np.stack([self.action_distribution(s) for s in states])

    def greedy_action(self, state) -> int:
        return int(np.argmax(self.action_distribution(state)))


class TabularPolicy(StochasticPolicy):
    """Policy over integer state ids stored as an (n_states, n_actions) table."""

    def __init__(self, table, policy_id: str, lineage: str = ""):
        table = np.array(table, dtype=float)
        if table.ndim != 2:
            raise ValueError("table must be 2-D (states x actions)")
        if np.any(table < 0) or np.any(np.abs(table.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("each row must be a probability vector")
        table.setflags(write=False)
        self.table = table
        self.n_actions = table.shape[1]
        self.policy_id = policy_id
        self.lineage = lineage

    def action_distribution(self, state) -> np.ndarray:
        return self.table[state]

    def distributions(self, states) -> np.ndarray:
        return self.table[np.asarray(states, dtype=np.int64)]

    def __repr__(self):
        return f"TabularPolicy({self.policy_id!r})"


def uniform_policy(n_states: int, n_actions: int, policy_id: str = "pi0") -> TabularPolicy:
    return TabularPolicy(np.full((n_states, n_actions), 1.0 / n_actions), policy_id)


class MixedPolicy(StochasticPolicy):
    """(1 - alpha) * target + alpha * base, evaluated exactly per state."""

    def __init__(self, base: StochasticPolicy, target: StochasticPolicy, alpha: float,
                 policy_id: str | None = None):
        self.base = base
        self.target = target
        self.alpha = float(alpha)
        self.n_actions = target.n_actions
        self.policy_id = policy_id or f"mix({target.policy_id},{base.policy_id},{alpha:g})"
        # collapse nested tabular mixtures so lookups stay O(1)
        base_table = getattr(base, "table", None)
        target_table = getattr(target, "table", None)
        if base_table is not None and target_table is not None:
            table = (1.0 - self.alpha) * target_table + self.alpha * base_table
            table.setflags(write=False)
            self.table = table

    def action_distribution(self, state) -> np.ndarray:
        if hasattr(self, "table"):
            return self.table[state]
        return ((1.0 - self.alpha) * self.target.action_distribution(state)
                + self.alpha * self.base.action_distribution(state))

    def distributions(self, states) -> np.ndarray:
        if hasattr(self, "table"):
            return self.table[np.asarray(states, dtype=np.int64)]
        return ((1.0 - self.alpha) * self.target.distributions(states)
                + self.alpha * self.base.distributions(states))

    def __repr__(self):
        return f"MixedPolicy({self.policy_id!r})"


def mix_policies(base: StochasticPolicy, target: StochasticPolicy, alpha: float,
                 policy_id: str | None = None) -> MixedPolicy:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if base.n_actions != target.n_actions:
        raise ValueError(f"action spaces differ: {base.n_actions} vs {target.n_actions}")
    base_table = getattr(base, "table", None)
    target_table = getattr(target, "table", None)
    if base_table is not None and target_table is not None and base_table.shape != target_table.shape:
        raise ValueError("state spaces differ")
    return MixedPolicy(base, target, alpha, policy_id)


def check_full_support(policy: StochasticPolicy, states, floor: float = SUPPORT_FLOOR):
    probs = policy.distributions(states)
    if np.any(probs < floor):
        raise ValueError(f"policy {policy.policy_id} is not full-support (min prob {probs.min():.3g})")


def discounted_sum(rewards, gamma: float) -> float:
    rewards = np.asarray(rewards, dtype=float)
    return float(np.sum(rewards * gamma ** np.arange(len(rewards))))


def normalized_return(traj: Trajectory, spec: MDPSpec) -> float:
    """((sum_t gamma^(t-1) r_t) - R_lower) / (R_upper - R_lower), clamped within 1e-9."""
    total = discounted_sum(traj.rewards, spec.gamma)
    lo, hi = spec.return_lower, spec.return_upper
    if total < lo - CLAMP_TOL or total > hi + CLAMP_TOL:
        raise ValueError(f"discounted return {total} outside configured bounds [{lo}, {hi}]")
    return min(1.0, max(0.0, (total - lo) / (hi - lo)))


def generate_trajectory(env, policy: StochasticPolicy, rng: np.random.Generator, spec: MDPSpec,
                        traj_id: int = 0, iteration: int = 0) -> Trajectory:
    """Roll ``policy`` out in ``env`` until a terminal state or the horizon."""
    state = env.reset(rng)
    transitions = []
    for _ in range(spec.horizon):
        probs = policy.action_distribution(state)
        action = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
        action = min(action, len(probs) - 1)
        next_state, reward, terminal = env.step(state, action)
        transitions.append(Transition(state, action, float(reward), next_state, bool(terminal)))
        if terminal:
            break
        state = next_state
    return Trajectory(tuple(transitions), policy.policy_id, traj_id, iteration)


# -- line-oriented serialisation -------------------------------------------------

TRAJECTORY_FIELDS = ("run", "iter", "traj_id", "behavior_id", "t", "state", "action",
                     "reward", "next_state", "terminal")


def _fmt_state(state) -> str:
    if isinstance(state, (np.ndarray, tuple, list)):
        return ";".join(repr(float(x)) for x in np.ravel(state))
    return str(int(state))


def _parse_state(text: str):
    if ";" in text or "." in text or "e" in text:
        return np.array([float(x) for x in text.split(";")])
    return int(text)


def trajectory_lines(trajs, run: int = 0) -> list[str]:
    lines = []
    for traj in trajs:
        for t, tr in enumerate(traj.transitions):
            lines.append(",".join([str(run), str(traj.iteration), str(traj.traj_id), traj.behavior_id,
                                   str(t), _fmt_state(tr.state), str(tr.action), repr(float(tr.reward)),
                                   _fmt_state(tr.next_state), str(int(tr.terminal))]))
    return lines


def parse_trajectory_lines(lines) -> list[Trajectory]:
    """Inverse of :func:`trajectory_lines`; groups rows by (run, traj_id)."""
    groups: dict = {}
    meta = {}
    for line in lines:
        line = line.strip()
        if not line or line.startswith("run,"):
            continue
        run, it, tid, bid, t, s, a, r, s2, term = line.split(",")
        key = (int(run), int(tid))
        groups.setdefault(key, []).append(
            (int(t), Transition(_parse_state(s), int(a), float(r), _parse_state(s2), term == "1")))
        meta[key] = (bid, int(it))
    out = []
    for key, rows in groups.items():
        rows.sort(key=lambda x: x[0])
        bid, it = meta[key]
        out.append(Trajectory(tuple(tr for _, tr in rows), bid, key[1], it))
    return out
