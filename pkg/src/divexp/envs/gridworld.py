"""4x4 grid world with an extra diagonal up-right action.

States are integer ids ``y * 4 + x`` with (0, 0) the bottom-left start and
(3, 3) the top-right absorbing goal. Coordinates are (x, y), y pointing up.
"""
from __future__ import annotations

import math

import numpy as np

from divexp.mdp import MDPSpec

WIDTH = HEIGHT = 4
N_STATES = WIDTH * HEIGHT
DIAG, UP, RIGHT, DOWN, LEFT = range(5)
ACTIONS = ("diag", "up", "right", "down", "left")
N_ACTIONS = len(ACTIONS)
_MOVES = {DIAG: (1, 1), UP: (0, 1), RIGHT: (1, 0), DOWN: (0, -1), LEFT: (-1, 0)}
START = (0, 0)
GOAL = (WIDTH - 1, HEIGHT - 1)

# states outside the top row and right column, in id order
INTERIOR = tuple((x, y) for y in range(HEIGHT - 1) for x in range(WIDTH - 1))
N_INTERIOR = len(INTERIOR)
FAMILY_SIZE = N_ACTIONS ** N_INTERIOR

def gridworld_spec(gamma: float = 1.0, horizon: int = 100) -> MDPSpec:
    """Return bounds for -1 rewards: the full horizon below, the 3-step optimal path above."""
    def total(steps):
        return -sum(gamma ** t for t in range(steps))
    return MDPSpec(gamma=gamma, horizon=horizon, return_lower=total(horizon), return_upper=total(3))


DEFAULT_SPEC = gridworld_spec()
QUALITY_HORIZON = 100


def state_id(x: int, y: int) -> int:
    return y * WIDTH + x


def coords(s: int) -> tuple[int, int]:
    return s % WIDTH, s // WIDTH


START_ID = state_id(*START)
GOAL_ID = state_id(*GOAL)
INTERIOR_IDS = np.array([state_id(x, y) for x, y in INTERIOR])


def gw_step(state, action):
    """One move from (x, y). Moves leaving the lattice are no-ops; reward is always -1."""
    if action not in _MOVES:
        raise ValueError(f"invalid action id {action!r}")
    x, y = state
    if not (0 <= x < WIDTH and 0 <= y < HEIGHT):
        raise ValueError(f"state {state!r} outside the grid")
    if (x, y) == GOAL:
        raise ValueError("goal state is terminal")
    dx, dy = _MOVES[action]
    nx, ny = x + dx, y + dy
    if not (0 <= nx < WIDTH and 0 <= ny < HEIGHT):
        nx, ny = x, y
    return (nx, ny), -1.0, (nx, ny) == GOAL


def _next_table() -> np.ndarray:
    table = np.empty((N_STATES, N_ACTIONS), dtype=np.int64)
    for s in range(N_STATES):
        for a in range(N_ACTIONS):
            if s == GOAL_ID:
                table[s, a] = s
            else:
                table[s, a] = state_id(*gw_step(coords(s), a)[0])
    return table


NEXT_STATE = _next_table()


class GridWorldPlus:
    """Environment wrapper over :func:`gw_step` using integer state ids."""

    n_states = N_STATES
    n_actions = N_ACTIONS
    def __init__(self, spec: MDPSpec = DEFAULT_SPEC):
        self.spec = spec

    def reset(self, rng=None) -> int:
        return START_ID

    def step(self, state: int, action: int):
        if not 0 <= action < N_ACTIONS:
            raise ValueError(f"invalid action id {action!r}")
        nxt, reward, terminal = gw_step(coords(state), action)
        return state_id(*nxt), reward, terminal

    def all_states(self):
        return range(N_STATES)

    def exact_value(self, table: np.ndarray, spec: MDPSpec | None = None) -> float:
        """Expected normalized return from the start under a tabular policy.

        Finite-horizon dynamic programming; episodes are truncated at the
        horizon exactly as :func:`divexp.mdp.generate_trajectory` does.
        """
        spec = spec or self.spec
        table = np.asarray(table, dtype=float)
        value = np.zeros(N_STATES)
        for _ in range(spec.horizon):
            cont = np.where(NEXT_STATE == GOAL_ID, 0.0, value[NEXT_STATE])
            value = np.sum(table * (-1.0 + spec.gamma * cont), axis=1)
            value[GOAL_ID] = 0.0
        return (value[START_ID] - spec.return_lower) / (spec.return_upper - spec.return_lower)


def optimal_steps(gridworld=None) -> dict:
    """Minimal steps to the goal from every (x, y), by backward dynamic programming."""
    dist = np.full(N_STATES, np.inf)
    dist[GOAL_ID] = 0
    for _ in range(N_STATES):
        cand = 1 + dist[NEXT_STATE].min(axis=1)
        cand[GOAL_ID] = 0
        dist = np.minimum(dist, cand)
    return {coords(s): int(dist[s]) for s in range(N_STATES)}


def optimal_actions() -> dict:
    """Set of optimal action ids per non-goal state id."""
    steps = optimal_steps()
    out = {}
    for s in range(N_STATES):
        if s == GOAL_ID:
            continue
        best = steps[coords(s)] - 1
        out[s] = frozenset(a for a in range(N_ACTIONS) if steps[coords(NEXT_STATE[s, a])] == best)
    return out


def _fixed_actions() -> np.ndarray:
    # optimal action at every non-interior state (unique there); goal gets a dummy
    acts = np.zeros(N_STATES, dtype=np.int64)
    for s, best in optimal_actions().items():
        acts[s] = min(best)
    return acts


FIXED_ACTIONS = _fixed_actions()
_POW5 = N_ACTIONS ** np.arange(N_INTERIOR)


def decode_index(index) -> np.ndarray:
    """Family index (or array of them) -> interior action digits, shape (..., 9)."""
    index = np.asarray(index, dtype=np.int64)
    if np.any(index < 0) or np.any(index >= FAMILY_SIZE):
        raise ValueError("family index out of range")
    return (index[..., None] // _POW5) % N_ACTIONS


def encode_actions(interior_actions) -> int:
    digits = np.asarray(interior_actions, dtype=np.int64)
    return int(np.sum(digits * _POW5))


def family_action_table(index) -> np.ndarray:
    """Full deterministic action map (..., 16) for family index/indices."""
    digits = decode_index(index)
    acts = np.broadcast_to(FIXED_ACTIONS, digits.shape[:-1] + (N_STATES,)).copy()
    acts[..., INTERIOR_IDS] = digits
    return acts


def _steps_to_goal(actions: np.ndarray) -> np.ndarray:
    """Steps to goal from every state under deterministic action maps (N, 16); inf if never."""
    succ = NEXT_STATE[np.arange(N_STATES), actions]
    dist = np.full(actions.shape, np.inf)
    dist[:, GOAL_ID] = 0.0
    # a deterministic path either reaches the goal in < 16 steps or cycles
    for _ in range(N_STATES):
        dist = np.take_along_axis(dist, succ, axis=1) + 1.0
        dist[:, GOAL_ID] = 0.0
    dist[dist > QUALITY_HORIZON] = np.inf
    return dist


_OPT_TOTAL = float(sum(optimal_steps().values()))


def family_quality(indices, chunk: int = 200_000) -> np.ndarray:
    """Vectorised :func:`policy_quality`; returns floats with ``inf`` for non-terminating policies."""
    indices = np.asarray(indices, dtype=np.int64).ravel()
    out = np.empty(len(indices))
    for start in range(0, len(indices), chunk):
        acts = family_action_table(indices[start:start + chunk])
        out[start:start + chunk] = _steps_to_goal(acts).sum(axis=1) - _OPT_TOTAL
    return out


def policy_quality(index: int) -> float:
    """Total extra steps to goal over all states vs. optimal; ``math.inf`` if some state never arrives."""
    q = family_quality([index])[0]
    return math.inf if np.isinf(q) else int(q)


def pairwise_diversity(i1: int, i2: int) -> int:
    """Number of interior states where two family policies choose different actions."""
    return int(np.sum(decode_index(i1) != decode_index(i2)))


def optimal_family_indices() -> np.ndarray:
    """All family indices that are optimal at every state (enumerated from the optimal action sets)."""
    opt = optimal_actions()
    choices = [sorted(opt[s]) for s in INTERIOR_IDS]
    grids = np.meshgrid(*choices, indexing="ij")
    digits = np.stack([g.ravel() for g in grids], axis=1)
    return np.sort(digits @ _POW5)


def greedy_interior_actions(policy) -> tuple:
    """Argmax action (lowest id on ties) at each interior state."""
    probs = policy.distributions(INTERIOR_IDS)
    return tuple(int(a) for a in np.argmax(probs, axis=1))


def is_optimal_action_map(interior_actions) -> bool:
    opt = optimal_actions()
    return all(a in opt[s] for s, a in zip(INTERIOR_IDS, interior_actions))
