import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from divexp.envs.gridworld import GridWorldPlus, N_ACTIONS, N_STATES
from divexp.mdp import (MDPSpec, MixedPolicy, TabularPolicy, Trajectory, Transition, generate_trajectory,
                        mix_policies, normalized_return, parse_trajectory_lines, trajectory_lines,
                        uniform_policy)


def one_state_policy(probs, pid="p"):
    return TabularPolicy([probs], pid)


def make_traj(rewards):
    trs = tuple(Transition(0, 0, r, 0, i == len(rewards) - 1) for i, r in enumerate(rewards))
    return Trajectory(trs, "b")


def random_table(rng, n_states=N_STATES, n_actions=N_ACTIONS):
    t = rng.dirichlet(np.ones(n_actions), size=n_states)
    return t


class TestMixPolicies:
    def test_alpha_zero_is_target(self):
        rng = np.random.default_rng(0)
        base, target = TabularPolicy(random_table(rng), "b"), TabularPolicy(random_table(rng), "t")
        mixed = mix_policies(base, target, 0.0)
        np.testing.assert_array_equal(mixed.table, target.table)

    def test_alpha_one_is_base(self):
        rng = np.random.default_rng(1)
        base, target = TabularPolicy(random_table(rng), "b"), TabularPolicy(random_table(rng), "t")
        np.testing.assert_array_equal(mix_policies(base, target, 1.0).table, base.table)

    def test_formula(self):
        mixed = mix_policies(one_state_policy([0.5, 0.5]), one_state_policy([1.0, 0.0]), 0.3)
        np.testing.assert_allclose(mixed.action_distribution(0), [0.85, 0.15], atol=1e-15)

    def test_mismatched_actions(self):
        with pytest.raises(ValueError):
            mix_policies(one_state_policy([0.5, 0.5]), one_state_policy([0.2, 0.3, 0.5]), 0.3)

    def test_alpha_out_of_range(self):
        with pytest.raises(ValueError):
            mix_policies(one_state_policy([0.5, 0.5]), one_state_policy([1.0, 0.0]), 1.5)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0, 1))
    def test_mixture_is_affine_per_state(self, seed, alpha):
        rng = np.random.default_rng(seed)
        base, target = TabularPolicy(random_table(rng), "b"), TabularPolicy(random_table(rng), "t")
        mixed = mix_policies(base, target, alpha)
        for s in range(N_STATES):
            expected = (1 - alpha) * target.action_distribution(s) + alpha * base.action_distribution(s)
            np.testing.assert_array_equal(mixed.action_distribution(s), expected)
            assert abs(mixed.action_distribution(s).sum() - 1.0) <= 1e-12

    def test_non_tabular_mixture_matches_tabular(self):
        from divexp.loop import UniformPolicy
        target = TabularPolicy(random_table(np.random.default_rng(3)), "t")
        lazy = MixedPolicy(UniformPolicy(N_ACTIONS), target, 0.4)
        eager = mix_policies(uniform_policy(N_STATES, N_ACTIONS), target, 0.4)
        assert not hasattr(lazy, "table")
        np.testing.assert_allclose(lazy.distributions(range(N_STATES)), eager.table, atol=1e-15)


class TestNormalizedReturn:
    spec = MDPSpec(gamma=0.5, horizon=10, return_lower=0.0, return_upper=2.0)

    def test_upper_bound(self):
        assert normalized_return(make_traj([2.0]), self.spec) == 1.0

    def test_lower_bound(self):
        assert normalized_return(make_traj([0.0]), self.spec) == 0.0

    def test_discounting(self):
        assert normalized_return(make_traj([1.0, 1.0]), self.spec) == 0.75

    def test_clamps_roundoff(self):
        assert normalized_return(make_traj([2.0 + 5e-10]), self.spec) == 1.0

    def test_misconfigured_bounds(self):
        with pytest.raises(ValueError):
            normalized_return(make_traj([3.0]), self.spec)

    @settings(max_examples=50, deadline=None)
    @given(rewards=st.lists(st.floats(-1, 0), min_size=1, max_size=6), i=st.integers(0, 5))
    def test_monotone_in_each_reward(self, rewards, i):
        spec = MDPSpec(gamma=0.9, horizon=10, return_lower=-10.0, return_upper=1.0)
        i = i % len(rewards)
        bumped = list(rewards)
        bumped[i] += 0.5
        assert normalized_return(make_traj(bumped), spec) > normalized_return(make_traj(rewards), spec)


def test_spec_invariants():
    with pytest.raises(ValueError):
        MDPSpec(gamma=0.0, horizon=1, return_lower=0, return_upper=1)
    with pytest.raises(ValueError):
        MDPSpec(gamma=0.9, horizon=0, return_lower=0, return_upper=1)
    with pytest.raises(ValueError):
        MDPSpec(gamma=0.9, horizon=1, return_lower=1, return_upper=1)


def test_trajectory_must_chain():
    with pytest.raises(ValueError):
        Trajectory((Transition(0, 0, -1.0, 1, False), Transition(2, 0, -1.0, 3, True)), "b")
    with pytest.raises(ValueError):
        Trajectory((), "b")


def test_transition_reward_finite():
    with pytest.raises(ValueError):
        Transition(0, 0, float("nan"), 1, False)


class _Instant:
    def reset(self, rng):
        return 0

    def step(self, state, action):
        return 0, 1.0, True


class TestGenerateTrajectory:
    def test_immediate_termination(self):
        spec = MDPSpec(gamma=1.0, horizon=5, return_lower=0.0, return_upper=1.0)
        traj = generate_trajectory(_Instant(), one_state_policy([0.5, 0.5], "pi"), np.random.default_rng(0), spec)
        assert len(traj) == 1 and traj.behavior_id == "pi"

    def test_optimal_policy_takes_shortest_path(self):
        env = GridWorldPlus()
        table = np.full((N_STATES, N_ACTIONS), 0.0)
        table[:, 0] = 1.0  # diagonal from the start is optimal
        traj = generate_trajectory(env, TabularPolicy(table, "diag"), np.random.default_rng(0), env.spec)
        # shortest path from (0,0) to (3,3) by breadth-first search over the lattice
        from collections import deque
        from divexp.envs.gridworld import NEXT_STATE, GOAL_ID, START_ID
        dist = {START_ID: 0}
        queue = deque([START_ID])
        while queue:
            s = queue.popleft()
            for s2 in NEXT_STATE[s]:
                if int(s2) not in dist:
                    dist[int(s2)] = dist[s] + 1
                    queue.append(int(s2))
        assert len(traj) == dist[GOAL_ID] == 3
        assert traj.transitions[-1].terminal

    def test_horizon_caps_length(self):
        env = GridWorldPlus()
        table = np.zeros((N_STATES, N_ACTIONS))
        table[:, 4] = 1.0  # always left: never terminates
        traj = generate_trajectory(env, TabularPolicy(table, "left"), np.random.default_rng(0), env.spec)
        assert len(traj) == env.spec.horizon
        assert not traj.transitions[-1].terminal

    def test_seed_determinism(self):
        env = GridWorldPlus()
        pi = uniform_policy(N_STATES, N_ACTIONS)
        a = [generate_trajectory(env, pi, np.random.default_rng(7), env.spec, traj_id=i) for i in range(5)]
        b = [generate_trajectory(env, pi, np.random.default_rng(7), env.spec, traj_id=i) for i in range(5)]
        assert "\n".join(trajectory_lines(a)).encode() == "\n".join(trajectory_lines(b)).encode()


def test_trajectory_lines_round_trip():
    env = GridWorldPlus()
    rng = np.random.default_rng(3)
    pi = uniform_policy(N_STATES, N_ACTIONS)
    trajs = [generate_trajectory(env, pi, rng, env.spec, traj_id=i, iteration=2) for i in range(4)]
    lines = trajectory_lines(trajs, run=5)
    assert lines[0].split(",")[:5] == ["5", "2", "0", "pi0", "0"]
    back = parse_trajectory_lines(lines)
    assert trajectory_lines(back, run=5) == lines


def test_trajectory_lines_vector_states():
    from divexp.envs import MountainCar
    env = MountainCar()

    class Wrapped:
        n_actions = 3
        policy_id = "u"

        def action_distribution(self, s):
            return np.full(3, 1 / 3)

    traj = generate_trajectory(env, Wrapped(), np.random.default_rng(0), MDPSpec(1.0, 4, -4.0, -1.0))
    back = parse_trajectory_lines(trajectory_lines([traj]))[0]
    np.testing.assert_array_equal(back.transitions[2].state, traj.transitions[2].state)
