"""Feed-forward networks that can be widened with a side branch.

A network is built from a JSON-able ``spec``::

    {"main": [["obs_self", []], ["goal", []]],   # input key + branch layers
     "hidden": [64, 64],                         # trunk widths
     "out": 5}

Branch outputs are concatenated and fed through the trunk, with ReLU after
every hidden layer and a linear output. :func:`augment` attaches a second
network over new inputs whose last hidden layer ``h2`` feeds hidden layer
``i_star`` of the trunk through a bridge matrix::

    h[i_star] = relu(W[i_star] @ h[i_star - 1] + b + W_bridge @ h2)
"""

import copy

import numpy as np

from .layers import Dense, ReLU, Sequential, build_branch


class StageError(ValueError):
    """Inputs or operations do not match the network's curriculum stage."""


class Encoder:
    """Several input branches whose outputs are concatenated."""

    def __init__(self, branches_spec, input_shapes, rng):
        self.keys = []
        self.branches = []
        self.widths = []
        for key, layers in branches_spec:
            if key not in input_shapes:
                raise KeyError(f"no input shape declared for {key!r}")
            branch, width = build_branch(layers, input_shapes[key], rng)
            self.keys.append(key)
            self.branches.append(branch)
            self.widths.append(width)

    @property
    def width(self):
        return sum(self.widths)

    def forward(self, inputs):
        outs = []
        for key, branch in zip(self.keys, self.branches):
            x = inputs[key]
            outs.append(branch.forward(x))
        return np.concatenate(outs, axis=1) if len(outs) > 1 else outs[0]

    def backward(self, grad):
        splits = np.cumsum(self.widths)[:-1]
        for branch, g in zip(self.branches, np.split(grad, splits, axis=1)):
            branch.backward(g)

    def named_params(self, prefix):
        for key, branch in zip(self.keys, self.branches):
            yield from branch.named_params(f"{prefix}.{key}")

    def zero_grad(self):
        for b in self.branches:
            b.zero_grad()


class AugmentableNet:
    def __init__(self, spec, input_shapes, rng, side_spec=None, i_star=None):
        self.spec = copy.deepcopy(spec)
        self.input_shapes = {k: tuple(v) for k, v in input_shapes.items()}
        self.main = Encoder(spec["main"], self.input_shapes, rng)
        widths = [self.main.width] + list(spec["hidden"])
        self.trunk = [Dense(a, b, rng) for a, b in zip(widths[:-1], widths[1:])]
        self.head = Dense(widths[-1], spec["out"], rng)
        self.side = None
        self.side_hidden = None
        self.bridge = None
        self.side_spec = None
        self.i_star = None
        if side_spec is not None:
            self._attach(side_spec, rng, i_star)

    # -- structure ---------------------------------------------------------

    @property
    def stage(self):
        return 1 if self.side is None else 2

    @property
    def main_keys(self):
        return list(self.main.keys)

    @property
    def side_keys(self):
        return [] if self.side is None else list(self.side.keys)

    def _attach(self, side_spec, rng, i_star):
        n_hidden = len(self.trunk)
        if i_star is None:
            i_star = n_hidden - 1
        if not 0 <= i_star < n_hidden:
            raise ValueError(f"i_star={i_star} is not a hidden layer index (0..{n_hidden - 1})")
        self.side_spec = copy.deepcopy(side_spec)
        self.side = Encoder(side_spec["inputs"], self.input_shapes, rng)
        widths = [self.side.width] + list(side_spec.get("hidden", []))
        self.side_hidden = [Dense(a, b, rng) for a, b in zip(widths[:-1], widths[1:])]
        m_k = widths[-1]
        m_i = self.trunk[i_star].n_out
        self.bridge = Dense(m_k, m_i, rng, bias=False)
        # zero bridge: the widened net starts out computing the original function
        self.bridge.params["W"][:] = 0.0
        self.i_star = i_star

    def named_params(self):
        """Yield ``(name, layer, key)`` for every parameter in a fixed order."""
        yield from self.main.named_params("main")
        for i, layer in enumerate(self.trunk):
            for k in layer.params:
                yield f"trunk.{i}.{k}", layer, k
        for k in self.head.params:
            yield f"head.{k}", self.head, k
        if self.side is not None:
            yield from self.side.named_params("side")
            for i, layer in enumerate(self.side_hidden):
                for k in layer.params:
                    yield f"side_hidden.{i}.{k}", layer, k
            yield "bridge.W", self.bridge, "W"

    def parameters(self):
        return {name: layer.params[k] for name, layer, k in self.named_params()}

    def gradients(self):
        return {name: layer.grads[k] for name, layer, k in self.named_params()}

    def num_parameters(self):
        return sum(v.size for v in self.parameters().values())

    def load_parameters(self, values, strict=True):
        """Copy arrays into this net by name. Returns the names that were set."""
        loaded = []
        for name, layer, k in self.named_params():
            if name in values:
                src = np.asarray(values[name], dtype=np.float64)
                if src.shape != layer.params[k].shape:
                    raise ValueError(
                        f"shape mismatch for {name}: {src.shape} vs {layer.params[k].shape}"
                    )
                layer.params[k][...] = src
                loaded.append(name)
            elif strict:
                raise KeyError(f"missing parameter {name}")
        return loaded

    def copy(self):
        return copy.deepcopy(self)

    def zero_grad(self):
        self.main.zero_grad()
        for layer in self.trunk:
            layer.zero_grad()
        self.head.zero_grad()
        if self.side is not None:
            self.side.zero_grad()
            for layer in self.side_hidden:
                layer.zero_grad()
            self.bridge.zero_grad()

    # -- computation -------------------------------------------------------

    def forward(self, inputs, aug=None):
        if self.side is None and aug:
            raise StageError("stage-1 network received augmentation inputs")
        if self.side is not None and aug is None:
            raise StageError("stage-2 network requires augmentation inputs")
        h = self.main.forward(inputs)
        h2 = None
        if self.side is not None:
            h2 = self.side.forward(aug)
            self._side_pre = []
            for layer in self.side_hidden:
                z2 = layer.forward(h2)
                self._side_pre.append(z2)
                h2 = np.maximum(z2, 0.0)
            bridge_out = self.bridge.forward(h2)
        self._pre = []
        for i, layer in enumerate(self.trunk):
            z = layer.forward(h)
            if i == self.i_star:
                z = z + bridge_out
            self._pre.append(z)
            h = np.maximum(z, 0.0)
        return self.head.forward(h)

    def backward(self, grad_out):
        g = self.head.backward(grad_out)
        g_bridge = None
        for i in reversed(range(len(self.trunk))):
            g = np.where(self._pre[i] > 0, g, 0.0)
            if i == self.i_star:
                g_bridge = g
            g = self.trunk[i].backward(g)
        self.main.backward(g)
        if self.side is not None:
            g2 = self.bridge.backward(g_bridge)
            for layer, z2 in zip(reversed(self.side_hidden), reversed(self._side_pre)):
                g2 = layer.backward(np.where(z2 > 0, g2, 0.0))
            self.side.backward(g2)


def augment(net, side_spec, side_input_shapes, rng, i_star=None):
    """Return a stage-2 copy of ``net`` widened by a side branch.

    The original parameters are copied bit-for-bit; the bridge starts at zero.
    """
    if net.stage != 1:
        raise StageError("network is already augmented")
    new = net.copy()
    new.input_shapes.update({k: tuple(v) for k, v in side_input_shapes.items()})
    new._attach(side_spec, rng, i_star)
    return new


def soft_update(target, source, tau):
    """theta' <- tau * theta + (1 - tau) * theta' for every parameter."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    src = source.parameters()
    for name, arr in target.parameters().items():
        arr *= 1.0 - tau
        arr += tau * src[name]
