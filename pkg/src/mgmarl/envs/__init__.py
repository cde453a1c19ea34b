from .checkers import CheckersWorld, ScriptedCheckersPolicy, checkers_reward, optimal_joint_plan
from .lane_merge import LaneMergeWorld, merge_reward
from .navigation import NavigationWorld, nav_reward, spawn_formation
from .scenario import load_scenario, make_game
from .toy import ToyMatrixGame, random_toy_game

__all__ = [
    "CheckersWorld",
    "LaneMergeWorld",
    "NavigationWorld",
    "ScriptedCheckersPolicy",
    "ToyMatrixGame",
    "checkers_reward",
    "load_scenario",
    "make_game",
    "merge_reward",
    "nav_reward",
    "optimal_joint_plan",
    "random_toy_game",
    "spawn_formation",
]
