"""Versioned checkpoint container.

A checkpoint is a ``.npz`` archive. Every parameter is stored under
``<net>/<param>`` with its own shape; a JSON document under ``__meta__``
records the format version and, per network, the stage tag, ``i_star`` and
the architecture spec needed to rebuild it.
"""

import json
import os
import tempfile

import numpy as np

from .net import AugmentableNet

FORMAT = "mgmarl-checkpoint"
VERSION = 1


def save_checkpoint(path, nets, extra=None):
    arrays = {}
    meta = {"format": FORMAT, "version": VERSION, "nets": {}, "extra": extra or {}}
    for name, net in nets.items():
        for pname, arr in net.parameters().items():
            arrays[f"{name}/{pname}"] = arr
        meta["nets"][name] = {
            "stage": net.stage,
            "i_star": net.i_star,
            "spec": net.spec,
            "side_spec": net.side_spec,
            "input_shapes": {k: list(v) for k, v in net.input_shapes.items()},
        }
    arrays["__meta__"] = np.array(json.dumps(meta))
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(suffix=".npz", dir=directory)
    os.close(fd)
    np.savez(tmp, **arrays)
    os.replace(tmp, path)


class Checkpoint:
    def __init__(self, meta, arrays):
        self.meta = meta
        self.arrays = arrays

    @property
    def extra(self):
        return self.meta["extra"]

    def net_names(self):
        return list(self.meta["nets"])

    def params(self, name):
        prefix = f"{name}/"
        return {k[len(prefix):]: v for k, v in self.arrays.items() if k.startswith(prefix)}

    def stage(self, name):
        return self.meta["nets"][name]["stage"]

    def build(self, name, rng=None):
        """Rebuild a network exactly as saved."""
        info = self.meta["nets"][name]
        rng = rng or np.random.default_rng(0)
        net = AugmentableNet(
            info["spec"], info["input_shapes"], rng,
            side_spec=info["side_spec"], i_star=info["i_star"],
        )
        net.load_parameters(self.params(name), strict=True)
        return net

    def restore_into(self, name, net):
        """Partial restore: copy every parameter present in the checkpoint.

        A stage-2 net accepts a stage-1 checkpoint; its side branch and bridge
        keep their fresh values.
        """
        return net.load_parameters(self.params(name), strict=False)


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as data:
        arrays = {k: data[k] for k in data.files}
    meta = json.loads(str(arrays.pop("__meta__")))
    if meta.get("format") != FORMAT:
        raise ValueError(f"{path} is not an {FORMAT} file")
    if meta.get("version") != VERSION:
        raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
    return Checkpoint(meta, arrays)
