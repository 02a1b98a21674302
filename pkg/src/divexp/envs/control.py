"""Mountain Car and Acrobot as pure transition functions over numpy state vectors."""
from __future__ import annotations

import math

import numpy as np

from divexp.envs import constants as C
from divexp.mdp import MDPSpec


def mc_step(state, action):
    """Mountain Car: action 0/1/2 = reverse/coast/forward throttle."""
    pos, vel = float(state[0]), float(state[1])
    if not (C.MC_POS_MIN <= pos <= C.MC_POS_MAX and abs(vel) <= C.MC_VEL_MAX):
        raise ValueError(f"mountain car state out of bounds: {state!r}")
    if action not in (0, 1, 2):
        raise ValueError(f"invalid action id {action!r}")
    vel += C.MC_FORCE * (action - 1) - C.MC_GRAVITY * math.cos(3 * pos)
    vel = min(max(vel, -C.MC_VEL_MAX), C.MC_VEL_MAX)
    pos += vel
    if pos <= C.MC_POS_MIN:
        pos, vel = C.MC_POS_MIN, 0.0
    pos = min(pos, C.MC_POS_MAX)
    return np.array([pos, vel]), -1.0, pos >= C.MC_GOAL


def _acrobot_derivs(s, torque):
    th1, th2, dth1, dth2 = s
    m1, m2, l1, lc1, lc2 = C.AC_M1, C.AC_M2, C.AC_L1, C.AC_LC1, C.AC_LC2
    i1, i2, g = C.AC_I1, C.AC_I2, C.AC_G
    d1 = m1 * lc1 ** 2 + m2 * (l1 ** 2 + lc2 ** 2 + 2 * l1 * lc2 * math.cos(th2)) + i1 + i2
    d2 = m2 * (lc2 ** 2 + l1 * lc2 * math.cos(th2)) + i2
    phi2 = m2 * lc2 * g * math.cos(th1 + th2 - math.pi / 2)
    phi1 = (-m2 * l1 * lc2 * dth2 ** 2 * math.sin(th2)
            - 2 * m2 * l1 * lc2 * dth2 * dth1 * math.sin(th2)
            + (m1 * lc1 + m2 * l1) * g * math.cos(th1 - math.pi / 2) + phi2)
    ddth2 = ((torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dth1 ** 2 * math.sin(th2) - phi2)
             / (m2 * lc2 ** 2 + i2 - d2 ** 2 / d1))
    ddth1 = -(d2 * ddth2 + phi1) / d1
    return np.array([dth1, dth2, ddth1, ddth2])


def _wrap(angle):
    return (angle + math.pi) % (2 * math.pi) - math.pi


def acrobot_tip_height(state) -> float:
    return -math.cos(state[0]) - math.cos(state[0] + state[1])


def acro_step(state, action):
    """Acrobot: torque -1/0/+1 on the second joint, four RK4 steps of 0.05 s."""
    s = np.asarray(state, dtype=float)
    if s.shape != (4,) or abs(s[2]) > C.AC_VEL1_MAX or abs(s[3]) > C.AC_VEL2_MAX \
            or abs(s[0]) > math.pi or abs(s[1]) > math.pi:
        raise ValueError(f"acrobot state out of bounds: {state!r}")
    if action not in (0, 1, 2):
        raise ValueError(f"invalid action id {action!r}")
    torque = C.AC_TORQUES[action]
    h = C.AC_DT
    for _ in range(C.AC_SUBSTEPS):
        k1 = _acrobot_derivs(s, torque)
        k2 = _acrobot_derivs(s + 0.5 * h * k1, torque)
        k3 = _acrobot_derivs(s + 0.5 * h * k2, torque)
        k4 = _acrobot_derivs(s + h * k3, torque)
        s = s + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    s[0], s[1] = _wrap(s[0]), _wrap(s[1])
    s[2] = min(max(s[2], -C.AC_VEL1_MAX), C.AC_VEL1_MAX)
    s[3] = min(max(s[3], -C.AC_VEL2_MAX), C.AC_VEL2_MAX)
    return s, -1.0, acrobot_tip_height(s) > C.AC_L1


class MountainCar:
    n_actions = 3
    state_low = np.array([C.MC_POS_MIN, -C.MC_VEL_MAX])
    state_high = np.array([C.MC_POS_MAX, C.MC_VEL_MAX])
    spec = MDPSpec(gamma=1.0, horizon=C.MC_HORIZON, return_lower=-float(C.MC_HORIZON), return_upper=-1.0)

    def reset(self, rng) -> np.ndarray:
        return np.array([rng.uniform(C.MC_START_LOW, C.MC_START_HIGH), 0.0])

    def step(self, state, action):
        return mc_step(state, action)


class Acrobot:
    n_actions = 3
    state_low = np.array([-math.pi, -math.pi, -C.AC_VEL1_MAX, -C.AC_VEL2_MAX])
    state_high = -state_low
    spec = MDPSpec(gamma=1.0, horizon=C.AC_HORIZON, return_lower=-float(C.AC_HORIZON), return_upper=-1.0)

    def reset(self, rng=None) -> np.ndarray:
        return np.zeros(4)

    def step(self, state, action):
        return acro_step(state, action)
