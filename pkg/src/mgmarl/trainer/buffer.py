import numpy as np

KEYS = ("state_env", "agents", "obs_self", "obs_others", "goals", "actions", "rewards",
        "next_state_env", "next_agents", "next_obs_self", "next_obs_others", "terminal")


class ReplayBuffer:
    """Preallocated transition store.

    ``circular`` keeps the newest ``capacity`` transitions forever; ``reset``
    is emptied by the trainer after every training round.
    """

    def __init__(self, capacity, mode="reset"):
        if mode not in ("reset", "circular"):
            raise ValueError(f"unknown buffer mode {mode!r}")
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.mode = mode
        self.data = None
        self.size = 0
        self.head = 0

    def __len__(self):
        return self.size

    def _allocate(self, transition):
        self.data = {}
        for key in KEYS:
            arr = np.asarray(transition[key])
            self.data[key] = np.zeros((self.capacity,) + arr.shape, dtype=np.float64 if key != "actions" else np.int64)

    def add(self, transition):
        if self.data is None:
            self._allocate(transition)
        for key in KEYS:
            self.data[key][self.head] = transition[key]
        self.head = (self.head + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def reset(self):
        self.size = 0
        self.head = 0

    def sample(self, batch_size, rng):
        """Uniform minibatch without replacement (the whole buffer if smaller)."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        n = min(batch_size, self.size)
        idx = rng.choice(self.size, size=n, replace=False)
        return {key: arr[idx] for key, arr in self.data.items()}
