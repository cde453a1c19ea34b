"""Cooperative navigation in an unbounded 2-D particle world.

Each agent must reach its own landmark. The per-step reward is the negative
distance to that landmark, minus 1 for every step in which the agent
overlaps another agent. Collisions are resolved by pushing the pair apart
along their centre line instead of simulating contact forces.
"""

import numpy as np

from ..game import DecomposedState, GoalAssignment, JointObservation, MultiGoalGame

FORMATIONS = {
    "antipodal": {
        "landmarks": [(0.9, 0.9), (-0.9, -0.9), (0.9, -0.9), (-0.9, 0.9)],
        "starts": [(-0.9, -0.9), (0.9, 0.9), (-0.9, 0.9), (0.9, -0.9)],
    },
    "cross": {
        "landmarks": [(0.9, -0.15), (-0.9, 0.15), (0.15, 0.9), (-0.15, -0.9)],
        "starts": [(-0.9, -0.15), (0.9, 0.15), (0.15, -0.9), (-0.15, 0.9)],
    },
    "merge": {
        "landmarks": [(0.9, -0.2), (0.9, 0.2)],
        "starts": [(-0.9, 0.2), (-0.9, -0.2)],
    },
}
FORMATION_ALIASES = {"intersection": "cross", "uniform": "uniform", "uniformrandom": "uniform"}

# do nothing, up, down, left, right
ACTION_DIRECTIONS = np.array([[0, 0], [0, 1], [0, -1], [-1, 0], [1, 0]], dtype=np.float64)

ARRIVAL_RADIUS = 0.05


def _formation_key(formation):
    key = formation.lower().replace("_", "").replace("-", "")
    key = FORMATION_ALIASES.get(key, key)
    if key != "uniform" and key not in FORMATIONS:
        raise ValueError(f"unknown formation {formation!r}")
    return key


def spawn_formation(formation, num_agents, rng=None):
    """Initial positions and landmarks for a named formation.

    Returns ``(starts, landmarks)``, each ``[num_agents, 2]``. The uniform
    layout draws both from (-1, 1)^2 and needs ``rng``.
    """
    key = _formation_key(formation)
    if key == "uniform":
        if rng is None:
            raise ValueError("uniform formation needs an rng")
        return rng.uniform(-1, 1, (num_agents, 2)), rng.uniform(-1, 1, (num_agents, 2))
    spec = FORMATIONS[key]
    if num_agents > len(spec["starts"]):
        raise ValueError(f"{formation} defines at most {len(spec['starts'])} agents")
    return (np.array(spec["starts"][:num_agents], dtype=np.float64),
            np.array(spec["landmarks"][:num_agents], dtype=np.float64))


def nav_reward(agent_pos, landmark_pos, collided):
    d = float(np.linalg.norm(np.asarray(agent_pos, float) - np.asarray(landmark_pos, float)))
    return -d - (1.0 if collided else 0.0)


def collisions(pos, radius):
    """Boolean [N] flags: agent overlaps at least one other agent."""
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    close = dist < 2 * radius
    np.fill_diagonal(close, False)
    return close.any(axis=1)


class NavigationWorld(MultiGoalGame):
    name = "nav"
    goal_dim = 2

    def __init__(self, num_agents=2, formation="merge", horizon=50, discount=0.99,
                 formation_prob=0.8, radius=0.15, dt=0.1, friction=0.25, accel=5.0,
                 max_speed=None):
        super().__init__()
        self.num_agents = num_agents
        self.formation = _formation_key(formation)
        self.horizon = horizon
        self.discount = discount
        self.formation_prob = formation_prob
        self.radius = radius
        self.dt = dt
        self.friction = friction
        self.accel = accel
        self.max_speed = max_speed
        if self.formation != "uniform":
            spawn_formation(self.formation, num_agents)  # validates the agent count

    def layout(self):
        return {
            "state_env": (0,),
            "state_agent": (4,),
            "obs_self": (4,),
            "obs_others": (4 * (self.num_agents - 1),),
            "goal": (2,),
        }

    def sample_goals(self, rng):
        if self.formation != "uniform" and rng.random() < self.formation_prob:
            starts, landmarks = spawn_formation(self.formation, self.num_agents)
            kind = self.formation
        else:
            starts, landmarks = spawn_formation("uniform", self.num_agents, rng)
            kind = "uniform"
        return GoalAssignment(landmarks, {"starts": starts, "formation": kind})

    def induced_mdp(self):
        return NavigationWorld(
            num_agents=1, formation="uniform", horizon=self.horizon, discount=self.discount,
            radius=self.radius, dt=self.dt, friction=self.friction, accel=self.accel,
            max_speed=self.max_speed,
        )

    # -- dynamics ----------------------------------------------------------

    def _reset(self, rng):
        self.pos = np.array(self.assignment.layout["starts"], dtype=np.float64)
        self.vel = np.zeros_like(self.pos)
        return self._state(), self._observe()

    def _step(self, actions):
        u = ACTION_DIRECTIONS[actions] * self.accel
        self.vel = (1.0 - self.friction) * self.vel + u * self.dt
        if self.max_speed is not None:
            speed = np.linalg.norm(self.vel, axis=1, keepdims=True)
            self.vel *= np.minimum(1.0, self.max_speed / np.maximum(speed, 1e-12))
        self.pos = self.pos + self.vel * self.dt
        hit = collisions(self.pos, self.radius) if self.num_agents > 1 else np.zeros(1, bool)
        if hit.any():
            self._separate()
        dist = np.linalg.norm(self.pos - self.goals, axis=1)
        rewards = -dist - hit.astype(np.float64)
        terminal = bool(np.all(dist < ARRIVAL_RADIUS))
        info = {"collisions": hit, "distances": dist, "success": dist < ARRIVAL_RADIUS}
        return self._state(), self._observe(), rewards, terminal, info

    def _separate(self):
        n = self.num_agents
        for i in range(n):
            for j in range(i + 1, n):
                d = self.pos[i] - self.pos[j]
                dist = np.linalg.norm(d)
                overlap = 2 * self.radius - dist
                if overlap > 0:
                    direction = d / dist if dist > 1e-12 else np.array([1.0, 0.0])
                    self.pos[i] += 0.5 * overlap * direction
                    self.pos[j] -= 0.5 * overlap * direction

    # -- encodings ---------------------------------------------------------

    def _state(self):
        return DecomposedState(np.zeros(0), np.concatenate([self.pos, self.vel], axis=1))

    def _observe(self):
        own = np.concatenate([self.pos, self.vel], axis=1)
        n = self.num_agents
        others = np.empty((n, 4 * (n - 1)))
        for i in range(n):
            rel = np.delete(own, i, axis=0) - own[i]
            others[i] = rel.ravel()
        return JointObservation(own, others)

    def encode_observation(self, agent_index):
        return self._observe()[agent_index]
