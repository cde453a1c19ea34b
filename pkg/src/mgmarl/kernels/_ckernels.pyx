# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: small convolutions and observation rasterisation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs, INFINITY

cnp.import_array()


def conv2d_forward(double[:, :, :, ::1] x, double[:, :, :, ::1] w, double[::1] b):
    cdef Py_ssize_t B = x.shape[0], H = x.shape[1], W = x.shape[2], C = x.shape[3]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1], F = w.shape[3]
    cdef Py_ssize_t ho = H - kh + 1, wo = W - kw + 1
    out_arr = np.empty((B, ho, wo, F))
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t n, i, j, di, dj, c, f
    cdef double xv
    for n in range(B):
        for i in range(ho):
            for j in range(wo):
                for f in range(F):
                    out[n, i, j, f] = b[f]
                for di in range(kh):
                    for dj in range(kw):
                        for c in range(C):
                            xv = x[n, i + di, j + dj, c]
                            if xv == 0.0:
                                continue
                            for f in range(F):
                                out[n, i, j, f] += xv * w[di, dj, c, f]
    return out_arr


def conv2d_backward(double[:, :, :, ::1] x, double[:, :, :, ::1] w,
                    double[:, :, :, ::1] grad_out):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[3]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1], F = w.shape[3]
    cdef Py_ssize_t ho = grad_out.shape[1], wo = grad_out.shape[2]
    dx_arr = np.zeros_like(np.asarray(x))
    dw_arr = np.zeros_like(np.asarray(w))
    db_arr = np.zeros(F)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef double[:, :, :, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t n, i, j, di, dj, c, f
    cdef double g, xv, acc
    for n in range(B):
        for i in range(ho):
            for j in range(wo):
                for f in range(F):
                    db[f] += grad_out[n, i, j, f]
                for di in range(kh):
                    for dj in range(kw):
                        for c in range(C):
                            xv = x[n, i + di, j + dj, c]
                            acc = 0.0
                            for f in range(F):
                                g = grad_out[n, i, j, f]
                                dw[di, dj, c, f] += xv * g
                                acc += g * w[di, dj, c, f]
                            dx[n, i + di, j + dj, c] += acc
    return dx_arr, dw_arr, db_arr


def occupancy_grid(double ego_x, long ego_sub, double ego_v, xs, subs, vs,
                   int rows, int cols, double cell, double speed_norm):
    cdef double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef long[::1] sv = np.ascontiguousarray(subs, dtype=np.int64)
    cdef double[::1] vv = np.ascontiguousarray(vs, dtype=np.float64)
    grid_arr = np.zeros((rows, cols, 2))
    best_arr = np.full((rows, cols), np.inf)
    cdef double[:, :, ::1] grid = grid_arr
    cdef double[:, ::1] best = best_arr
    cdef int half_r = rows // 2, half_c = cols // 2
    cdef Py_ssize_t k
    cdef int r, c
    cdef double dx
    for k in range(xv.shape[0]):
        dx = xv[k] - ego_x
        r = <int>floor(dx / cell + 0.5) + half_r
        c = <int>(sv[k] - ego_sub) + half_c
        if 0 <= r < rows and 0 <= c < cols and fabs(dx) < best[r, c]:
            best[r, c] = fabs(dx)
            grid[r, c, 0] = 1.0
            grid[r, c, 1] = (vv[k] - ego_v) / speed_norm
    return grid_arr


def grid_patch(double[:, :, ::1] layers, int row, int col, int size, fill):
    cdef Py_ssize_t h = layers.shape[0], w = layers.shape[1], nc = layers.shape[2]
    cdef double[::1] fv = np.ascontiguousarray(fill, dtype=np.float64)
    out_arr = np.empty((size, size, nc))
    cdef double[:, :, ::1] out = out_arr
    cdef int half = size // 2
    cdef Py_ssize_t i, j, c
    cdef long r, q
    for i in range(size):
        r = row - half + i
        for j in range(size):
            q = col - half + j
            if 0 <= r < h and 0 <= q < w:
                for c in range(nc):
                    out[i, j, c] = layers[r, q, c]
            else:
                for c in range(nc):
                    out[i, j, c] = fv[c]
    return out_arr
