"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 50]

Prints one line per kernel with the mean time of each backend and the
speed-up, after checking both backends agree.
"""

import argparse
import timeit

import numpy as np

from mgmarl.kernels import _pykernels

try:
    from mgmarl.kernels import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    x = rng.normal(size=(128, 13, 9, 2))
    w = rng.normal(size=(5, 3, 2, 4))
    b = rng.normal(size=4)
    g = rng.normal(size=(128, 9, 7, 4))
    xs = rng.uniform(0, 200, 12)
    subs = rng.integers(0, 16, 12).astype(np.int64)
    vs = rng.uniform(20, 35, 12)
    layers = rng.random((5, 13, 3))
    return {
        "conv2d_forward": lambda k: k.conv2d_forward(x, w, b),
        "conv2d_backward": lambda k: k.conv2d_backward(x, w, g),
        "occupancy_grid": lambda k: k.occupancy_grid(100.0, 5, 30.0, xs, subs, vs, 13, 9, 2.5, 29.0),
        "grid_patch": lambda k: k.grid_patch(layers, 2, 6, 5, np.array([0.0, 0.0, 1.0])),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-10, atol=1e-12)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=50)
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; only the NumPy backend is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'numpy (ms)':>12}{'cython (ms)':>13}{'speed-up':>10}")
    for name, call in cases(rng).items():
        py = timeit.timeit(lambda: call(_pykernels), number=args.repeat) / args.repeat * 1e3
        if _ckernels is None:
            print(f"{name:<18}{py:>12.4f}{'-':>13}{'-':>10}")
            continue
        if not _same(call(_pykernels), call(_ckernels)):
            raise SystemExit(f"{name}: backends disagree")
        cy = timeit.timeit(lambda: call(_ckernels), number=args.repeat) / args.repeat * 1e3
        print(f"{name:<18}{py:>12.4f}{cy:>13.4f}{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()
