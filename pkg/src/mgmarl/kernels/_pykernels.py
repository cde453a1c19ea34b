"""NumPy reference versions of the compiled kernels.

Every function here has the same signature and semantics as its twin in
``_ckernels.pyx``; the test-suite checks the two against each other.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d_forward(x, w, b):
    """Valid, stride-1 convolution over NHWC input.

    x: [B, H, W, C], w: [kh, kw, C, F], b: [F] -> [B, H-kh+1, W-kw+1, F]
    """
    kh, kw = w.shape[0], w.shape[1]
    # windows: [B, Ho, Wo, C, kh, kw]
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))
    return np.einsum("bhwcij,ijcf->bhwf", windows, w, optimize=True) + b


def conv2d_backward(x, w, grad_out):
    """Gradients of :func:`conv2d_forward` with respect to x, w and b."""
    kh, kw = w.shape[0], w.shape[1]
    ho, wo = grad_out.shape[1], grad_out.shape[2]
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))
    dw = np.einsum("bhwcij,bhwf->ijcf", windows, grad_out, optimize=True)
    db = grad_out.sum(axis=(0, 1, 2))
    dx = np.zeros_like(x)
    for i in range(kh):
        for j in range(kw):
            dx[:, i:i + ho, j:j + wo, :] += grad_out @ w[i, j].T
    return dx, dw, db


def occupancy_grid(ego_x, ego_sub, ego_v, xs, subs, vs, rows, cols, cell, speed_norm):
    """Rasterise surrounding vehicles into an egocentric [rows, cols, 2] grid.

    Channel 0 is binary occupancy, channel 1 the relative speed
    ``(v_other - v_ego) / speed_norm`` of the occupying vehicle. Row ``rows // 2``
    and column ``cols // 2`` hold the ego position. Vehicles falling outside
    the window are ignored; the nearest vehicle wins when two share a cell.
    """
    grid = np.zeros((rows, cols, 2))
    half_r, half_c = rows // 2, cols // 2
    best = np.full((rows, cols), np.inf)
    for x, s, v in zip(xs, subs, vs):
        dx = x - ego_x
        r = int(np.floor(dx / cell + 0.5)) + half_r
        c = int(s - ego_sub) + half_c
        if 0 <= r < rows and 0 <= c < cols and abs(dx) < best[r, c]:
            best[r, c] = abs(dx)
            grid[r, c, 0] = 1.0
            grid[r, c, 1] = (v - ego_v) / speed_norm
    return grid


def grid_patch(layers, row, col, size, fill):
    """Square window of ``size`` cells centred on (row, col) from a [H, W, C] array.

    Cells outside the array take the per-channel ``fill`` values.
    """
    h, w, c = layers.shape
    half = size // 2
    out = np.empty((size, size, c))
    out[:] = fill
    r0, c0 = row - half, col - half
    rs, re = max(r0, 0), min(r0 + size, h)
    cs, ce = max(c0, 0), min(c0 + size, w)
    if rs < re and cs < ce:
        out[rs - r0:re - r0, cs - c0:ce - c0] = layers[rs:re, cs:ce]
    return out
