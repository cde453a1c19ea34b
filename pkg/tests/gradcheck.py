"""Central finite-difference checks for AugmentableNet parameter gradients."""

import numpy as np

from mgmarl.nn import AugmentableNet, augment

FD_STEP = 1e-6
FD_RTOL = 1e-4


def random_net(rng, conv=False, augmented=False):
    """A small random net over a vector input and, optionally, an image input."""
    shapes = {"x": (int(rng.integers(2, 6)),), "g": (2,)}
    main = [["x", [{"type": "dense", "units": int(rng.integers(3, 7))}]], ["g", []]]
    if conv:
        shapes["img"] = (5, 4, 2)
        main.append(["img", [{"type": "conv", "filters": 3, "kernel": [3, 2]}, {"type": "flatten"}]])
    spec = {"main": main, "hidden": [int(rng.integers(4, 9)), int(rng.integers(4, 9))], "out": 3}
    net = AugmentableNet(spec, shapes, rng)
    if augmented:
        side = {"inputs": [["y", [{"type": "dense", "units": 4}]]], "hidden": [5]}
        net = augment(net, side, {"y": (3,)}, rng)
        net.bridge.params["W"][:] = rng.normal(0, 0.5, net.bridge.params["W"].shape)
    batch = int(rng.integers(2, 5))
    inputs = {k: rng.normal(size=(batch,) + v) for k, v in shapes.items()}
    aug = {"y": rng.normal(size=(batch, 3))} if augmented else None
    return net, inputs, aug


def gradient_errors(net, inputs, aug, rng, step=FD_STEP):
    """Relative error of backprop against central differences, per parameter array."""
    weights = None

    def loss():
        return float((net.forward(inputs, aug) * weights).sum())

    out = net.forward(inputs, aug)
    weights = rng.normal(size=out.shape)
    net.zero_grad()
    net.backward(weights)
    analytic = {k: v.copy() for k, v in net.gradients().items()}
    errors = {}
    for name, arr in net.parameters().items():
        numeric = np.zeros_like(arr)
        flat, nflat = arr.reshape(-1), numeric.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            up = loss()
            flat[i] = old - step
            down = loss()
            flat[i] = old
            nflat[i] = (up - down) / (2 * step)
        scale = max(np.linalg.norm(numeric), np.linalg.norm(analytic[name]), 1e-8)
        errors[name] = float(np.linalg.norm(numeric - analytic[name]) / scale)
    return errors
