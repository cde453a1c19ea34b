"""Differentiable layers in float64 with explicit forward/backward passes.

Each layer caches what it needs from the last ``forward`` call; ``backward``
accumulates into ``grads`` (so call :meth:`zero_grad` between steps) and
returns the gradient with respect to the layer input.
"""

import numpy as np

from .. import kernels


class Layer:
    params: dict
    grads: dict

    def __init__(self):
        self.params = {}
        self.grads = {}

    def zero_grad(self):
        for k, v in self.params.items():
            self.grads[k] = np.zeros_like(v)

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def output_shape(self, input_shape):
        raise NotImplementedError


def uniform_init(rng, fan_in, shape, scale=1.0):
    limit = scale / np.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Dense(Layer):
    def __init__(self, n_in, n_out, rng, bias=True, scale=1.0):
        super().__init__()
        self.params["W"] = uniform_init(rng, n_in, (n_in, n_out), scale)
        if bias:
            self.params["b"] = np.zeros(n_out)
        self.zero_grad()
        self._x = None

    @property
    def n_out(self):
        return self.params["W"].shape[1]

    def forward(self, x):
        self._x = x
        out = x @ self.params["W"]
        if "b" in self.params:
            out = out + self.params["b"]
        return out

    def backward(self, grad):
        self.grads["W"] += self._x.T @ grad
        if "b" in self.params:
            self.grads["b"] += grad.sum(axis=0)
        return grad @ self.params["W"].T

    def output_shape(self, input_shape):
        return (self.n_out,)


class ReLU(Layer):
    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad):
        return np.where(self._mask, grad, 0.0)

    def output_shape(self, input_shape):
        return input_shape


class Flatten(Layer):
    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)


class Conv2D(Layer):
    """Valid, stride-1 convolution on NHWC tensors."""

    def __init__(self, in_channels, filters, kernel, rng):
        super().__init__()
        kh, kw = kernel
        fan_in = kh * kw * in_channels
        self.params["W"] = uniform_init(rng, fan_in, (kh, kw, in_channels, filters))
        self.params["b"] = np.zeros(filters)
        self.zero_grad()

    def forward(self, x):
        self._x = np.ascontiguousarray(x)
        return kernels.conv2d_forward(self._x, self.params["W"], self.params["b"])

    def backward(self, grad):
        dx, dw, db = kernels.conv2d_backward(
            self._x, self.params["W"], np.ascontiguousarray(grad)
        )
        self.grads["W"] += dw
        self.grads["b"] += db
        return dx

    def output_shape(self, input_shape):
        h, w, _ = input_shape
        kh, kw, _, f = self.params["W"].shape
        if h < kh or w < kw:
            raise ValueError(f"kernel {kh}x{kw} does not fit input {h}x{w}")
        return (h - kh + 1, w - kw + 1, f)


class Sequential(Layer):
    def __init__(self, layers=()):
        super().__init__()
        self.layers = list(layers)

    def named_params(self, prefix):
        for i, layer in enumerate(self.layers):
            for k, v in layer.params.items():
                yield f"{prefix}.{i}.{k}", layer, k

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def output_shape(self, input_shape):
        for layer in self.layers:
            input_shape = layer.output_shape(input_shape)
        return input_shape


def build_branch(spec, input_shape, rng):
    """Build a Sequential from a list of layer dicts.

    Supported entries: ``{"type": "conv", "filters": F, "kernel": [kh, kw]}``,
    ``{"type": "flatten"}`` and ``{"type": "dense", "units": U}``. Conv and
    dense layers are followed by a ReLU. Rank>1 inputs are flattened
    automatically before the first dense layer.
    """
    layers = []
    shape = tuple(input_shape)
    for entry in spec:
        kind = entry["type"]
        if kind == "conv":
            if len(shape) != 3:
                raise ValueError(f"conv needs an HWC input, got shape {shape}")
            layer = Conv2D(shape[2], entry["filters"], tuple(entry["kernel"]), rng)
            layers += [layer, ReLU()]
        elif kind == "flatten":
            layer = Flatten()
            layers.append(layer)
        elif kind == "dense":
            if len(shape) != 1:
                layers.append(Flatten())
                shape = Flatten().output_shape(shape)
            layer = Dense(shape[0], entry["units"], rng)
            layers += [layer, ReLU()]
        else:
            raise ValueError(f"unknown layer type {kind!r}")
        shape = layer.output_shape(shape)
    if len(shape) != 1:
        layers.append(Flatten())
        shape = (int(np.prod(shape)),)
    return Sequential(layers), shape[0]
