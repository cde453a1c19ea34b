"""Numerical hot loops with a compiled backend and a NumPy fallback.

The Cython extension ``_ckernels`` is used when it was built at install
time, except for the convolution forward pass, where the BLAS-backed NumPy
version is faster. Setting ``MGMARL_KERNELS=python`` forces the NumPy
versions everywhere.

Functions
---------
conv2d_forward, conv2d_backward
    Valid stride-1 NHWC convolution and its gradients.
occupancy_grid
    Egocentric vehicle rasterisation for the lane-merge observation.
grid_patch
    Padded square crop used for gridworld fields of view.
"""

import os

from . import _pykernels

if os.environ.get("MGMARL_KERNELS", "").lower() == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

# the NumPy forward pass goes through BLAS and beats the compiled loop
conv2d_forward = _pykernels.conv2d_forward
conv2d_backward = _impl.conv2d_backward
occupancy_grid = _impl.occupancy_grid
grid_patch = _impl.grid_patch

__all__ = [
    "BACKEND",
    "conv2d_forward",
    "conv2d_backward",
    "occupancy_grid",
    "grid_patch",
]
