"""Two-agent Checkers gridworld.

The playable region is ``rows x (cols + 1)``: a reward-free start column
followed by ``cols`` columns of checkered red and yellow collectibles. It is
embedded in a ``(rows + 2) x (cols + 5)`` grid whose margin cells are never
reachable and only exist so that the 5x5 field of view is always defined.

Role A (goal ``[1, 0]``) gains +1 for red and loses 0.5 for yellow; role B
(goal ``[0, 1]``) the reverse. Neither agent can clear the board alone without
penalties, because same-colour cells are only diagonally adjacent.
"""

import itertools
from collections import deque

import numpy as np

from .. import kernels
from ..game import DecomposedState, GoalAssignment, JointObservation, MultiGoalGame

RED, YELLOW = 0, 1
ROLE_A, ROLE_B = 0, 1
ROLE_COLOR = {ROLE_A: RED, ROLE_B: YELLOW}
FOV = 5
HORIZON = 75

# do nothing, up, down, left, right
MOVES = ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1))

_REWARD = {
    ("A", "red"): 1.0, ("A", "yellow"): -0.5, ("A", "empty"): 0.0,
    ("B", "red"): -0.5, ("B", "yellow"): 1.0, ("B", "empty"): 0.0,
}


def checkers_reward(role, content):
    if isinstance(role, (int, np.integer)):
        role = "AB"[role]
    return _REWARD[(role, content)]


def cell_color(r, c):
    """Colour of region cell (r, c); column 0 holds no reward."""
    if c == 0:
        return None
    return RED if (r + c) % 2 == 0 else YELLOW


def start_cells(rows):
    return {ROLE_A: (0, 0), ROLE_B: (rows - 1, 0)}


def resolve_moves(positions, targets):
    """Apply simultaneous moves; conflicting agents stay where they are.

    Two agents may not end in the same cell or swap cells. An agent may
    follow another one into the cell it is vacating.
    """
    final = list(targets)
    changed = True
    while changed:
        changed = False
        for i, j in itertools.permutations(range(len(final)), 2):
            if final[i] == final[j] and (final[i] != positions[i] or final[j] != positions[j]):
                final[i], final[j] = positions[i], positions[j]
                changed = True
            elif final[i] == positions[j] and final[j] == positions[i] and i < j and final[i] != positions[i]:
                final[i], final[j] = positions[i], positions[j]
                changed = True
    return final


class CheckersWorld(MultiGoalGame):
    name = "checkers"
    goal_dim = 2

    def __init__(self, rows=3, cols=8, horizon=HORIZON, discount=0.99, num_agents=2, role=None):
        super().__init__()
        if num_agents not in (1, 2):
            raise ValueError("Checkers supports one or two agents")
        if rows < 2 or cols < 1:
            raise ValueError("reward region must have at least 2 rows and 1 column")
        self.rows = rows
        self.cols = cols
        self.num_agents = num_agents
        self.horizon = horizon
        self.discount = discount
        self.role = role
        self.grid_shape = (rows + 2, cols + 5)

    def layout(self):
        r, c = self.rows, self.cols
        self_vec = 2 + 2 + self.num_actions
        return {
            "state_env": ((r * (c + 1) * 2),),
            "state_env_parts": [("board", (r, c + 1, 2))],
            "state_agent": (4,),
            "obs_self": (self_vec + FOV * FOV * 3,),
            "obs_self_parts": [("vec", (self_vec,)), ("view", (FOV, FOV, 3))],
            "obs_others": (2 * (self.num_agents - 1),),
            "goal": (2,),
        }

    @property
    def optimum(self):
        """Best joint score: every collectible taken by the agent it rewards."""
        return float(self.rows * self.cols)

    def sample_goals(self, rng):
        if self.num_agents == 2:
            roles = [ROLE_A, ROLE_B]
        else:
            roles = [self.role if self.role is not None else int(rng.integers(2))]
        return GoalAssignment(np.eye(2)[roles], {"roles": roles})

    def induced_mdp(self):
        return CheckersWorld(self.rows, self.cols, self.horizon, self.discount, num_agents=1)

    # -- dynamics ----------------------------------------------------------

    def _reset(self, rng):
        self.roles = list(self.assignment.layout["roles"])
        starts = start_cells(self.rows)
        self.pos = [starts[role] for role in self.roles]
        self.board = np.zeros((self.rows, self.cols + 1, 2))
        for r in range(self.rows):
            for c in range(1, self.cols + 1):
                self.board[r, c, cell_color(r, c)] = 1.0
        self.collected = np.zeros((self.num_agents, 2))
        self.color_counts = self.board.sum(axis=(0, 1))
        self.prev_action = np.zeros(self.num_agents, dtype=np.int64)
        return self._state(), self._observe()

    def _target(self, pos, action):
        dr, dc = MOVES[action]
        r, c = pos[0] + dr, pos[1] + dc
        if 0 <= r < self.rows and 0 <= c <= self.cols:
            return (r, c)
        return pos

    def _step(self, actions):
        targets = [self._target(p, a) for p, a in zip(self.pos, actions)]
        self.pos = resolve_moves(self.pos, targets)
        rewards = np.zeros(self.num_agents)
        for i, (r, c) in enumerate(self.pos):
            cell = self.board[r, c]
            if cell.any():
                color = int(np.argmax(cell))
                rewards[i] = checkers_reward(self.roles[i], ("red", "yellow")[color])
                self.collected[i, color] += 1
                self.board[r, c] = 0.0
        self.prev_action = np.asarray(actions, dtype=np.int64).copy()
        terminal = not self.board.any()
        own = np.array([self.collected[i, ROLE_COLOR[role]] for i, role in enumerate(self.roles)])
        target = np.array([self.color_counts[ROLE_COLOR[role]] for role in self.roles])
        info = {"remaining": int(self.board.sum()), "collected": self.collected.copy(),
                "success": own == target}
        return self._state(), self._observe(), rewards, terminal, info

    # -- encodings ---------------------------------------------------------

    def _state(self):
        parts = np.array([[r, c, *self.collected[i]] for i, (r, c) in enumerate(self.pos)], dtype=np.float64)
        return DecomposedState(self.board.ravel().copy(), parts)

    def _grid_coords(self, pos):
        return pos[0] + 1, pos[1] + 2

    def _grid_layers(self):
        g = np.zeros(self.grid_shape + (3,))
        g[..., 2] = 1.0
        g[1:self.rows + 1, 2:self.cols + 3, :2] = self.board
        g[1:self.rows + 1, 2:self.cols + 3, 2] = 0.0
        return g

    def _observe(self):
        n = self.num_agents
        hr, hc = self.grid_shape
        base = self._grid_layers()
        coords = np.array([self._grid_coords(p) for p in self.pos], dtype=np.float64)
        norm = coords / np.array([hr, hc])
        vec_len = 2 + 2 + self.num_actions
        self_parts = np.zeros((n, vec_len + FOV * FOV * 3))
        others = np.zeros((n, 2 * (n - 1)))
        for i in range(n):
            layers = base.copy()
            for j in range(n):
                if j != i:
                    gr, gc = self._grid_coords(self.pos[j])
                    layers[gr, gc, 2] = 1.0
            gr, gc = self._grid_coords(self.pos[i])
            view = kernels.grid_patch(layers, gr, gc, FOV, np.array([0.0, 0.0, 1.0]))
            vec = np.concatenate([norm[i], self.collected[i], np.eye(self.num_actions)[self.prev_action[i]]])
            self_parts[i] = np.concatenate([vec, view.ravel()])
            others[i] = np.delete(norm, i, axis=0).ravel()
        return JointObservation(self_parts, others)

    def encode_observation(self, agent_index):
        return self._observe()[agent_index]


# -- scripted optimum --------------------------------------------------------

def _clear_block(rows, positions, remaining, col_limit, targets):
    """Shortest penalty-free joint action sequence that collects ``targets``.

    Agents stay within columns ``<= col_limit`` and never step onto an
    uncollected cell of the colour that penalises them.
    """
    index = {cell: k for k, cell in enumerate(sorted(remaining))}
    goal_mask = sum(1 << index[cell] for cell in targets)
    full = (1 << len(index)) - 1
    start = (tuple(positions), full)
    parent = {start: None}
    queue = deque([start])
    colors = {cell: cell_color(*cell) for cell in index}
    roles = (ROLE_A, ROLE_B)
    found = None
    while queue:
        node = queue.popleft()
        pos, mask = node
        if mask & goal_mask == 0:
            found = node
            break
        for acts in itertools.product(range(len(MOVES)), repeat=2):
            tgt = []
            for p, a in zip(pos, acts):
                r, c = p[0] + MOVES[a][0], p[1] + MOVES[a][1]
                tgt.append((r, c) if 0 <= r < rows and 0 <= c <= col_limit else p)
            new = tuple(resolve_moves(list(pos), tgt))
            m = mask
            ok = True
            for k, p in enumerate(new):
                if p in index and (m >> index[p]) & 1:
                    if colors[p] != ROLE_COLOR[roles[k]]:
                        ok = False
                        break
                    m &= ~(1 << index[p])
            if not ok:
                continue
            child = (new, m)
            if child not in parent:
                parent[child] = (node, acts)
                queue.append(child)
    if found is None:
        raise RuntimeError("no penalty-free schedule exists for this block")
    actions = []
    node = found
    while parent[node] is not None:
        node, acts = parent[node]
        actions.append(acts)
    actions.reverse()
    left = {cell for cell, k in index.items() if (found[1] >> k) & 1}
    return actions, list(found[0]), left


def optimal_joint_plan(rows, cols, block=4):
    """Joint action sequence for roles (A, B) that scores ``rows * cols``.

    Columns are cleared in blocks, each solved by breadth-first search.
    """
    starts = start_cells(rows)
    positions = [starts[ROLE_A], starts[ROLE_B]]
    remaining = {(r, c) for r in range(rows) for c in range(1, cols + 1)}
    plan = []
    for lo in range(1, cols + 1, block):
        hi = min(lo + block - 1, cols)
        targets = {cell for cell in remaining if lo <= cell[1] <= hi}
        local = {cell for cell in remaining if cell[1] <= hi}
        actions, positions, left = _clear_block(rows, positions, local, hi, targets)
        remaining = (remaining - local) | left
        plan.extend(actions)
    return plan


class ScriptedCheckersPolicy:
    """Replays ``optimal_joint_plan``; does nothing once the plan is spent."""

    def __init__(self, rows, cols):
        self.plan = optimal_joint_plan(rows, cols)

    def __len__(self):
        return len(self.plan)

    def act(self, t):
        if t < len(self.plan):
            return np.array(self.plan[t], dtype=np.int64)
        return np.zeros(2, dtype=np.int64)
