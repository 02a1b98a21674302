from divexp.envs.gridworld import GridWorldPlus, gw_step, optimal_steps, policy_quality, pairwise_diversity
from divexp.envs.control import MountainCar, Acrobot, mc_step, acro_step

__all__ = ["GridWorldPlus", "gw_step", "optimal_steps", "policy_quality", "pairwise_diversity",
           "MountainCar", "Acrobot", "mc_step", "acro_step"]
