"""Kinematic double-lane-merge road with sub-lane resolution.

A straight 200 m road has 4 lanes of 3.2 m, each split into 4 sub-lanes of
0.8 m. Vehicles move longitudinally with a point-mass speed model and shift
laterally one sub-lane per step. Collisions are rectangle overlaps of the
5 m x 1.8 m vehicle footprints. Optional background traffic keeps its lane at
constant speed and brakes when the gap ahead closes.
"""

import numpy as np

from .. import kernels
from ..game import DecomposedState, GoalAssignment, JointObservation, MultiGoalGame

ROAD_LENGTH = 200.0
NUM_LANES = 4
SUBLANES_PER_LANE = 4
NUM_SUBLANES = NUM_LANES * SUBLANES_PER_LANE
SUBLANE_WIDTH = 0.8
ROAD_WIDTH = NUM_SUBLANES * SUBLANE_WIDTH  # 12.8 m
DT = 0.2
SPEED_NORM = 29.0
OVERSPEED = 35.7
GOAL_X = 190.0
HORIZON = 33
ACCEL = 2.5
VEHICLE_LENGTH = 5.0
VEHICLE_WIDTH = 1.8
EMIT_SPEED = 30.0
EMIT_SPEED_STD = 0.5
DEPART_STD = 0.5
GRID_ROWS = 13                 # 15 m back and forward at 2.5 m
GRID_COLS = 9                  # 4 sub-lanes either side
GRID_CELL = 2.5

# no-op, accelerate, decelerate, shift left, shift right
NOOP, ACCELERATE, DECELERATE, LEFT, RIGHT = range(5)

SCENARIOS = {
    "C1": {"initial": [1, 2], "goal": [3, 0]},
    "C2": {"initial": None, "goal": None},
    "C3": {"initial": [1, 2], "goal": [2, 1]},
    "C4": {"initial": [0, 1], "goal": [3, 2]},
}
MERGE_EVENTS = ("collision", "timeout", "arrival", "overspeed", "none")


def center_sublane(lane):
    return SUBLANES_PER_LANE * int(lane) + 1


def sublane_offset(sublane, goal_lane):
    """Normalised signed sub-lane difference to the goal lane centre."""
    return (sublane - center_sublane(goal_lane)) / NUM_SUBLANES


def merge_reward(speed, event="none", delta=None):
    """Reward for one vehicle and one event.

    An overspeed penalty is added on top of any other event when
    ``speed > 35.7`` m/s.
    """
    if event not in MERGE_EVENTS:
        raise ValueError(f"unknown event {event!r}")
    if event == "arrival":
        if delta is None or not 0.0 <= delta <= 1.0:
            raise ValueError(f"arrival needs a normalised sub-lane difference in [0, 1], got {delta}")
        r = 10.0 * (1.0 - delta)
    else:
        r = {"collision": -1.0, "timeout": -10.0, "overspeed": 0.0, "none": 0.0}[event]
    if speed > OVERSPEED:
        r -= 0.1
    return r


def overlapping(x1, s1, x2, s2):
    return abs(x1 - x2) < VEHICLE_LENGTH and abs(s1 - s2) * SUBLANE_WIDTH < VEHICLE_WIDTH


class LaneMergeWorld(MultiGoalGame):
    name = "merge"
    goal_dim = NUM_LANES

    def __init__(self, num_agents=2, horizon=HORIZON, discount=0.99, scenario=None,
                 traffic=0, preset_prob=0.8, jitter=True):
        super().__init__()
        self.num_agents = num_agents
        self.horizon = horizon
        self.discount = discount
        if scenario is not None and scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {scenario!r}")
        self.scenario = scenario
        self.traffic = int(traffic)
        self.preset_prob = preset_prob
        self.jitter = jitter

    def layout(self):
        return {
            "state_env": (0,),
            "state_agent": (3,),
            "obs_self": (3,),
            "obs_others": (GRID_ROWS, GRID_COLS, 2),
            "goal": (NUM_LANES,),
        }

    def sample_goals(self, rng):
        n = self.num_agents
        fixed = SCENARIOS.get(self.scenario) if self.scenario else None
        if fixed is not None and fixed["initial"] is not None:
            initial, goal = list(fixed["initial"]), list(fixed["goal"])
        elif fixed is None and n == 2 and rng.random() < self.preset_prob:
            # agent 1: lane 1 -> lane 2, agent 2: lane 2 -> lane 1
            initial, goal = [1, 2], [2, 1]
        else:
            initial = list(rng.choice(NUM_LANES, size=n, replace=n > NUM_LANES))
            goal = list(rng.integers(0, NUM_LANES, size=n))
        goals = np.eye(NUM_LANES)[goal]
        return GoalAssignment(goals, {"initial_lanes": initial, "goal_lanes": goal})

    def induced_mdp(self):
        return LaneMergeWorld(num_agents=1, horizon=self.horizon, discount=self.discount,
                              traffic=0, preset_prob=0.0, jitter=self.jitter)

    # -- dynamics ----------------------------------------------------------

    def _reset(self, rng):
        lay = self.assignment.layout
        n = self.num_agents
        self.goal_lanes = np.array(lay["goal_lanes"])
        self.x = np.zeros(n)
        self.sub = np.array([center_sublane(l) for l in lay["initial_lanes"]], dtype=np.int64)
        self.v = np.clip(rng.normal(EMIT_SPEED, EMIT_SPEED_STD, n), 0.0, None)
        if self.jitter:
            delay = np.maximum(rng.normal(0.0, DEPART_STD, n), 0.0)
            self.depart = np.rint(delay / DT).astype(np.int64)
        else:
            self.depart = np.zeros(n, dtype=np.int64)
        self.arrived = np.zeros(n, bool)
        self.succeeded = np.zeros(n, bool)
        self._spawn_traffic(rng)
        return self._state(), self._observe()

    def _spawn_traffic(self, rng):
        k = self.traffic
        if k <= 0:
            self.bx = np.zeros(0)
            self.bsub = np.zeros(0, dtype=np.int64)
            self.bv = np.zeros(0)
            return
        lanes = rng.integers(0, NUM_LANES, size=k)
        xs = rng.uniform(-20.0, ROAD_LENGTH * 0.6, size=k)
        # keep background vehicles off the agents' spawn points
        xs = np.where(np.abs(xs) < 2 * VEHICLE_LENGTH, xs + 3 * VEHICLE_LENGTH, xs)
        self.bx = xs
        self.bsub = np.array([center_sublane(l) for l in lanes], dtype=np.int64)
        self.bv = rng.uniform(22.0, 28.0, size=k)

    def _active(self):
        return (self.depart <= self.t) & ~self.arrived

    def _step(self, actions):
        n = self.num_agents
        active = self._active()
        rewards = np.zeros(n)
        for i in np.flatnonzero(active):
            a = actions[i]
            if a == ACCELERATE:
                self.v[i] += ACCEL * DT
            elif a == DECELERATE:
                self.v[i] = max(self.v[i] - ACCEL * DT, 0.0)
            elif a == LEFT:
                self.sub[i] = min(self.sub[i] + 1, NUM_SUBLANES - 1)
            elif a == RIGHT:
                self.sub[i] = max(self.sub[i] - 1, 0)
            self.x[i] += self.v[i] * DT
        self._move_traffic(active)

        collided = np.zeros(n, bool)
        idx = np.flatnonzero(active)
        for a_i, i in enumerate(idx):
            for j in idx[a_i + 1:]:
                if overlapping(self.x[i], self.sub[i], self.x[j], self.sub[j]):
                    collided[i] = collided[j] = True
            for bx, bs in zip(self.bx, self.bsub):
                if overlapping(self.x[i], self.sub[i], bx, bs):
                    collided[i] = True
        events = []
        for i in range(n):
            ev = []
            if active[i]:
                if collided[i]:
                    rewards[i] += merge_reward(0.0, "collision")
                    ev.append("collision")
                if self.v[i] > OVERSPEED:
                    rewards[i] += merge_reward(self.v[i], "overspeed")
                    ev.append("overspeed")
                if self.x[i] > GOAL_X:
                    delta = abs(sublane_offset(self.sub[i], self.goal_lanes[i]))
                    rewards[i] += merge_reward(0.0, "arrival", delta)
                    self.arrived[i] = True
                    self.succeeded[i] = self.sub[i] // SUBLANES_PER_LANE == self.goal_lanes[i]
                    ev.append("arrival")
            events.append(ev)
        terminal = bool(self.arrived.all())
        info = {"events": events, "collisions": collided, "success": self.succeeded.copy()}
        return self._state(), self._observe(), rewards, terminal, info

    def timeout_rewards(self, state):
        return np.where(self.arrived, 0.0, merge_reward(0.0, "timeout"))

    def _move_traffic(self, active):
        if len(self.bx) == 0:
            return
        xs = np.concatenate([self.bx, self.x[active]])
        subs = np.concatenate([self.bsub, self.sub[active]])
        for k in range(len(self.bx)):
            ahead = (xs > self.bx[k]) & (np.abs(subs - self.bsub[k]) * SUBLANE_WIDTH < VEHICLE_WIDTH)
            gap = np.min(xs[ahead] - self.bx[k]) if ahead.any() else np.inf
            if gap < VEHICLE_LENGTH + self.bv[k] * 1.0:
                self.bv[k] = max(self.bv[k] - ACCEL * DT, 0.0)
            self.bx[k] += self.bv[k] * DT

    # -- encodings ---------------------------------------------------------

    def _state(self):
        y = (self.sub + 0.5) * SUBLANE_WIDTH
        parts = np.stack([self.x / ROAD_LENGTH, y / ROAD_WIDTH, self.v / SPEED_NORM], axis=1)
        return DecomposedState(np.zeros(0), parts)

    def _observe(self):
        n = self.num_agents
        self_parts = np.stack([
            self.v / SPEED_NORM,
            np.array([sublane_offset(self.sub[i], self.goal_lanes[i]) for i in range(n)]),
            (GOAL_X - self.x) / ROAD_LENGTH,
        ], axis=1)
        others = np.zeros((n, GRID_ROWS, GRID_COLS, 2))
        present = (self.depart <= self.t) & ~self.arrived
        for i in range(n):
            mask = present.copy()
            mask[i] = False
            xs = np.concatenate([self.x[mask], self.bx])
            subs = np.concatenate([self.sub[mask], self.bsub])
            vs = np.concatenate([self.v[mask], self.bv])
            others[i] = kernels.occupancy_grid(
                float(self.x[i]), int(self.sub[i]), float(self.v[i]), xs, subs, vs,
                GRID_ROWS, GRID_COLS, GRID_CELL, SPEED_NORM,
            )
        return JointObservation(self_parts, others)

    def encode_observation(self, agent_index):
        return self._observe()[agent_index]
