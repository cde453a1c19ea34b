import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mgmarl import kernels
from mgmarl.kernels import _pykernels

try:
    from mgmarl.kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_c = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def naive_conv(x, w, b):
    n, h, wd, _ = x.shape
    kh, kw, _, f = w.shape
    out = np.zeros((n, h - kh + 1, wd - kw + 1, f))
    for i in range(h - kh + 1):
        for j in range(wd - kw + 1):
            patch = x[:, i:i + kh, j:j + kw, :]
            out[:, i, j, :] = np.tensordot(patch, w, axes=([1, 2, 3], [0, 1, 2])) + b
    return out


conv_case = st.tuples(
    st.integers(1, 3), st.integers(3, 7), st.integers(3, 7), st.integers(1, 3),
    st.integers(1, 3), st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**31 - 1),
)


def _conv_arrays(case):
    n, h, w, c, kh, kw, f, seed = case
    rng = np.random.default_rng(seed)
    return (rng.normal(size=(n, h, w, c)), rng.normal(size=(kh, kw, c, f)), rng.normal(size=f))


@settings(max_examples=40, deadline=None)
@given(conv_case)
def test_python_conv_matches_naive(case):
    x, w, b = _conv_arrays(case)
    assert np.allclose(_pykernels.conv2d_forward(x, w, b), naive_conv(x, w, b), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(conv_case)
def test_python_conv_backward_is_adjoint(case):
    x, w, b = _conv_arrays(case)
    g = np.random.default_rng(case[-1] + 1).normal(size=naive_conv(x, w, b).shape)
    dx, dw, db = _pykernels.conv2d_backward(x, w, g)
    # <g, conv(x, w)> is bilinear, so its gradients are exact directional derivatives
    dirx = np.random.default_rng(3).normal(size=x.shape)
    dirw = np.random.default_rng(4).normal(size=w.shape)
    lin = lambda xx, ww, bb: float((naive_conv(xx, ww, bb) * g).sum())
    assert np.isclose(lin(dirx, w, 0 * b), (dx * dirx).sum())
    assert np.isclose(lin(x, dirw, 0 * b), (dw * dirw).sum())
    assert np.allclose(db, g.sum(axis=(0, 1, 2)))


@needs_c
@settings(max_examples=40, deadline=None)
@given(conv_case)
def test_compiled_conv_matches_python(case):
    x, w, b = _conv_arrays(case)
    assert np.allclose(_ckernels.conv2d_forward(x, w, b), _pykernels.conv2d_forward(x, w, b), atol=1e-12)
    g = np.random.default_rng(case[-1]).normal(size=naive_conv(x, w, b).shape)
    for c_out, p_out in zip(_ckernels.conv2d_backward(x, w, g), _pykernels.conv2d_backward(x, w, g)):
        assert np.allclose(c_out, p_out, atol=1e-11)


vehicles = st.lists(st.tuples(st.floats(-30, 30), st.integers(0, 15), st.floats(0, 40)), max_size=10)


@needs_c
@settings(max_examples=60, deadline=None)
@given(vehicles, st.integers(0, 15), st.floats(0, 40))
def test_compiled_occupancy_matches_python(cars, ego_sub, ego_v):
    xs = np.array([c[0] for c in cars], dtype=np.float64) + 100.0
    subs = np.array([c[1] for c in cars], dtype=np.int64)
    vs = np.array([c[2] for c in cars], dtype=np.float64)
    args = (100.0, ego_sub, ego_v, xs, subs, vs, 13, 9, 2.5, 29.0)
    assert np.array_equal(_ckernels.occupancy_grid(*args), _pykernels.occupancy_grid(*args))


@needs_c
@settings(max_examples=60, deadline=None)
@given(st.integers(-3, 10), st.integers(-3, 12), st.sampled_from([1, 3, 5]), st.integers(0, 999))
def test_compiled_patch_matches_python(row, col, size, seed):
    layers = np.random.default_rng(seed).random((7, 9, 3))
    fill = np.array([0.0, 0.0, 1.0])
    assert np.array_equal(_ckernels.grid_patch(layers, row, col, size, fill),
                          _pykernels.grid_patch(layers, row, col, size, fill))


def test_patch_pads_outside_cells():
    layers = np.arange(2 * 3 * 1, dtype=np.float64).reshape(2, 3, 1)
    patch = kernels.grid_patch(layers, 0, 0, 3, np.array([-1.0]))
    assert patch[0, :, 0].tolist() == [-1, -1, -1]
    assert patch[1:, 1:, 0].tolist() == [[0, 1], [3, 4]]


def test_occupancy_nearest_vehicle_wins():
    grid = kernels.occupancy_grid(0.0, 4, 10.0, np.array([2.4, 2.6]), np.array([4, 4]),
                                  np.array([20.0, 0.0]), 13, 9, 2.5, 10.0)
    assert grid[7, 4, 0] == 1.0 and grid[7, 4, 1] == pytest.approx(1.0)
    assert grid[..., 0].sum() == 1.0


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")
